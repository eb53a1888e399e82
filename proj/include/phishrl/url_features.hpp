#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phishrl {

// Decomposition of a URL. Userinfo is not split out of the authority: an
// '@' stays part of the host string, which is where spoofing tricks live.
struct UrlParts {
    std::string scheme;  // lowercased, "http" when absent
    std::string host;    // lowercased, brackets kept for IPv6 literals
    std::optional<std::string> port;
    bool is_ip_host = false;
    std::vector<std::string> subdomains;
    std::string registrable_domain;
    std::string tld;
    std::string path;
    std::string query;     // without the leading '?'
    std::string fragment;  // without the leading '#'

    // Reassembled normalized form.
    std::string to_string() const;
    // Registrable domain without its TLD ("example" for "example.com").
    std::string domain_label() const;

    bool operator==(const UrlParts&) const = default;
};

// Byte offsets of the host inside a trimmed raw URL string.
struct HostSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::string_view trim(std::string_view s);

UrlParts parse_url(std::string_view raw);

// Locates the host within trim(raw). Throws MalformedUrl when there is none.
HostSpan locate_host(std::string_view raw);

bool is_ipv4_literal(std::string_view host);
bool is_ip_literal(std::string_view host);

// Byte-level character distribution with add-one smoothing and a reserved
// mass for characters that never occurred in the fitting corpus.
class CharDistribution {
public:
    // Validates that every probability is > 0 and that the total mass plus
    // smoothing_mass is 1 within 1e-9.
    static CharDistribution from_probabilities(const std::map<unsigned char, double>& probs,
                                               double smoothing_mass);

    // Probability for c; smoothing_mass() when c was never seen.
    double probability(unsigned char c) const;
    bool contains(unsigned char c) const { return seen_[c]; }
    double smoothing_mass() const { return smoothing_mass_; }
    std::size_t alphabet_size() const { return alphabet_size_; }
    std::map<unsigned char, double> probabilities() const;

private:
    std::array<double, 256> prob_{};
    std::array<bool, 256> seen_{};
    double smoothing_mass_ = 0.0;
    std::size_t alphabet_size_ = 0;
};

CharDistribution fit_char_model(const std::vector<std::string>& benign_urls);

// Sum of log p(c) over the bytes of s. Returns 0 for the empty string.
double char_log_prob(std::string_view s, const CharDistribution& model);

using TldTable = std::map<std::string, double>;

// Relative frequency of each TLD among the given URLs; unparseable URLs are skipped.
TldTable fit_tld_table(const std::vector<std::string>& urls);

const std::vector<std::string>& default_brand_domains();

inline constexpr std::size_t kUrlFeatureCount = 22;

struct UrlFeatureVector {
    double URLLength = 0;
    double DomainLength = 0;
    double IsDomainIP = 0;
    double URLSimilarityIndex = 0;
    double CharContinuationRate = 0;
    double TLDLegitimateProb = 0;
    double URLCharProb = 0;
    double TLDLength = 0;
    double NoOfSubDomain = 0;
    double HasObfuscation = 0;
    double NoOfObfuscatedChar = 0;
    double ObfuscationRatio = 0;
    double NoOfLettersInURL = 0;
    double LetterRatioInURL = 0;
    double NoOfDegitsInURL = 0;
    double DeditRatioInURL = 0;
    double NoOfEqualsInURL = 0;
    double NoOfQMarkInURL = 0;
    double NoOfAmpersandInURL = 0;
    double NoOfOtherSpecialCharsInURL = 0;
    double SpacialCharRatioInURL = 0;
    double IsHTTPS = 0;

    std::array<double, kUrlFeatureCount> to_array() const;
    bool operator==(const UrlFeatureVector&) const = default;
};

extern const std::array<const char*, kUrlFeatureCount> kUrlFeatureNames;

// Normalized longest-common-subsequence similarity between host and the
// closest brand: LCS / max(|host|, |brand|). 0 for an empty brand list.
double url_similarity_index(std::string_view host, const std::vector<std::string>& brands);

double char_continuation_rate(std::string_view s);

// Percent-escape triples, non-ASCII bytes and "xn--" labels, one each.
std::size_t count_obfuscated_chars(std::string_view raw, const UrlParts& parts);

UrlFeatureVector extract_url_features(std::string_view raw, const CharDistribution& model,
                                      const TldTable& tld_prob_table,
                                      const std::vector<std::string>& brands = default_brand_domains());

}  // namespace phishrl
