#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "phishrl/corpus.hpp"

namespace phishrl {

enum class ObfuscationKind { homoglyph, punycode, percent_encode, tld_swap, ip_or_random_domain };

const char* to_string(ObfuscationKind kind);
// Throws std::invalid_argument for unknown names.
ObfuscationKind parse_obfuscation_kind(std::string_view name);
const std::vector<ObfuscationKind>& all_obfuscation_kinds();

// Rewrites url in place of its raw form (no scheme is added). Deterministic
// for a fixed (url, kind, seed); homoglyph and tld_swap do not consume the
// seed. Throws NothingToObfuscate when the kind has no applicable site.
std::string generate_variant(std::string_view url, ObfuscationKind kind, std::uint64_t seed);

// Standard %XX decoding; malformed escapes are copied through.
std::string percent_decode(std::string_view s);

// Originals first, then per_record variants for every phishing record, each
// labeled 1 with freshly extracted URL features and the source's content features.
std::vector<SampleRecord> augment_dataset(const std::vector<SampleRecord>& records,
                                          const std::vector<ObfuscationKind>& kinds, std::size_t per_record,
                                          std::uint64_t seed, const UrlStatistics& stats,
                                          const std::vector<std::string>& brands = default_brand_domains());

}  // namespace phishrl
