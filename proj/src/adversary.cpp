#include "phishrl/adversary.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <stdexcept>
#include <utility>

#include "phishrl/errors.hpp"
#include "phishrl/idn.hpp"
#include "phishrl/rng.hpp"

namespace phishrl {

namespace {

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

// Host labels of the raw URL with their byte offsets.
struct HostLayout {
    Span host;
    std::vector<Span> labels;
    bool is_ip = false;
};

HostLayout layout_of(std::string_view t) {
    HostLayout layout;
    const auto span = locate_host(t);
    layout.host = {span.begin, span.end};
    const auto host = t.substr(span.begin, span.end - span.begin);
    layout.is_ip = is_ip_literal(host);
    std::size_t start = span.begin;
    for (std::size_t i = span.begin; i <= span.end; ++i) {
        if (i == span.end || t[i] == '.') {
            layout.labels.push_back({start, i});
            start = i + 1;
        }
    }
    if (layout.labels.size() > 1 && layout.labels.back().size() == 0) layout.labels.pop_back();
    return layout;
}

// The label a brand lives in: second-to-last for dotted hosts.
std::optional<Span> brand_label(const HostLayout& layout) {
    if (layout.is_ip || layout.labels.empty()) return std::nullopt;
    return layout.labels.size() >= 2 ? layout.labels[layout.labels.size() - 2] : layout.labels.front();
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string replace_span(std::string_view t, Span span, std::string_view replacement) {
    std::string out(t.substr(0, span.begin));
    out += replacement;
    out += t.substr(span.end);
    return out;
}

std::string homoglyph(std::string_view t, const HostLayout& layout) {
    static constexpr std::array<std::pair<char, char>, 5> kTable = {
        {{'o', '0'}, {'l', '1'}, {'i', '1'}, {'a', '@'}, {'e', '3'}}};
    const auto label = brand_label(layout);
    if (!label) throw NothingToObfuscate("homoglyph: host has no brand label");
    for (const auto& [from, to] : kTable) {
        std::string out(t);
        bool changed = false;
        for (std::size_t i = label->begin; i < label->end; ++i) {
            if (lower(out[i]) == from) {
                out[i] = to;
                changed = true;
            }
        }
        if (changed) return out;
    }
    throw NothingToObfuscate("homoglyph: no substitutable character in host");
}

char32_t confusable_for(char c) {
    switch (c) {
        case 'a': return U'а';
        case 'c': return U'с';
        case 'e': return U'е';
        case 'i': return U'і';
        case 'j': return U'ј';
        case 'o': return U'о';
        case 'p': return U'р';
        case 's': return U'ѕ';
        case 'x': return U'х';
        case 'y': return U'у';
        default: return 0;
    }
}

std::string punycode(std::string_view t, const HostLayout& layout, Rng& rng) {
    const auto label = brand_label(layout);
    if (!label) throw NothingToObfuscate("punycode: host has no brand label");
    std::string ascii;
    for (std::size_t i = label->begin; i < label->end; ++i) ascii.push_back(lower(t[i]));
    if (ascii.rfind("xn--", 0) == 0) throw NothingToObfuscate("punycode: label is already encoded");
    std::vector<std::size_t> sites;
    for (std::size_t i = 0; i < ascii.size(); ++i) {
        if (static_cast<unsigned char>(ascii[i]) >= 0x80) throw NothingToObfuscate("punycode: label is not ASCII");
        if (confusable_for(ascii[i]) != 0) sites.push_back(i);
    }
    if (sites.empty()) throw NothingToObfuscate("punycode: no confusable letter in label");
    std::u32string unicode(ascii.begin(), ascii.end());
    const std::size_t site = sites[rng.uniform_index(sites.size())];
    unicode[site] = confusable_for(ascii[site]);
    return replace_span(t, *label, idn::label_to_ascii(idn::utf8_encode(unicode)));
}

bool is_unreserved(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (u < 0x80 && std::isalnum(u)) || c == '-' || c == '.' || c == '_' || c == '~';
}

std::string percent_encode(std::string_view t, const HostLayout& layout, Rng& rng) {
    const std::size_t path_begin = std::min(t.find_first_of("/?#", layout.host.end), t.size());
    const std::size_t path_end = std::min(t.find_first_of("?#", path_begin), t.size());
    std::vector<Span> segments;
    std::size_t start = path_begin;
    for (std::size_t i = path_begin; i <= path_end; ++i) {
        if (i == path_end || t[i] == '/') {
            const Span seg{start, i};
            if (std::any_of(t.begin() + static_cast<std::ptrdiff_t>(seg.begin),
                            t.begin() + static_cast<std::ptrdiff_t>(seg.end), is_unreserved)) {
                segments.push_back(seg);
            }
            start = i + 1;
        }
    }
    if (segments.empty()) throw NothingToObfuscate("percent_encode: no path characters to encode");
    const Span seg = segments[rng.uniform_index(segments.size())];
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string encoded;
    for (std::size_t i = seg.begin; i < seg.end; ++i) {
        const auto c = static_cast<unsigned char>(t[i]);
        if (is_unreserved(t[i])) {
            encoded.push_back('%');
            encoded.push_back(kHex[c >> 4]);
            encoded.push_back(kHex[c & 0xf]);
        } else {
            encoded.push_back(t[i]);
        }
    }
    return replace_span(t, seg, encoded);
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string tld_swap(std::string_view t, const HostLayout& layout) {
    static const std::array<std::string_view, 5> kLookalikes = {"co", "org", "net", "cm", "om"};
    if (layout.is_ip || layout.labels.size() < 2) throw NothingToObfuscate("tld_swap: host has no TLD");
    const Span tld = layout.labels.back();
    std::string current;
    for (std::size_t i = tld.begin; i < tld.end; ++i) current.push_back(lower(t[i]));
    std::string_view best;
    std::size_t best_distance = SIZE_MAX;
    for (const auto candidate : kLookalikes) {
        if (candidate == current) continue;
        const auto d = edit_distance(current, candidate);
        if (d < best_distance) {
            best_distance = d;
            best = candidate;
        }
    }
    return replace_span(t, tld, best);
}

std::string ip_or_random_domain(std::string_view t, const HostLayout& layout, Rng& rng) {
    const auto original = t.substr(layout.host.begin, layout.host.size());
    std::string tld = "com";
    if (!layout.is_ip && layout.labels.size() >= 2) {
        const Span s = layout.labels.back();
        tld = std::string(t.substr(s.begin, s.size()));
    }
    static constexpr char kAlnum[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    for (int attempt = 0; attempt < 16; ++attempt) {
        std::string host;
        if (rng.uniform_index(2) == 0) {
            for (int octet = 0; octet < 4; ++octet) {
                if (octet) host.push_back('.');
                host += std::to_string(1 + rng.uniform_index(254));
            }
        } else {
            const std::size_t len = 8 + rng.uniform_index(5);
            for (std::size_t i = 0; i < len; ++i) host.push_back(kAlnum[rng.uniform_index(36)]);
            host += "." + tld;
        }
        if (host != original) return replace_span(t, layout.host, host);
    }
    throw NothingToObfuscate("ip_or_random_domain: could not draw a distinct host");
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

const char* to_string(ObfuscationKind kind) {
    switch (kind) {
        case ObfuscationKind::homoglyph: return "homoglyph";
        case ObfuscationKind::punycode: return "punycode";
        case ObfuscationKind::percent_encode: return "percent_encode";
        case ObfuscationKind::tld_swap: return "tld_swap";
        case ObfuscationKind::ip_or_random_domain: return "ip_or_random_domain";
    }
    return "unknown";
}

const std::vector<ObfuscationKind>& all_obfuscation_kinds() {
    static const std::vector<ObfuscationKind> kinds = {ObfuscationKind::homoglyph, ObfuscationKind::punycode,
                                                       ObfuscationKind::percent_encode, ObfuscationKind::tld_swap,
                                                       ObfuscationKind::ip_or_random_domain};
    return kinds;
}

ObfuscationKind parse_obfuscation_kind(std::string_view name) {
    for (const auto kind : all_obfuscation_kinds()) {
        if (name == to_string(kind)) return kind;
    }
    throw std::invalid_argument("unknown obfuscation kind '" + std::string(name) + "'");
}

std::string generate_variant(std::string_view url, ObfuscationKind kind, std::uint64_t seed) {
    const auto t = trim(url);
    const HostLayout layout = layout_of(t);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(kind)));
    switch (kind) {
        case ObfuscationKind::homoglyph: return homoglyph(t, layout);
        case ObfuscationKind::punycode: return punycode(t, layout, rng);
        case ObfuscationKind::percent_encode: return percent_encode(t, layout, rng);
        case ObfuscationKind::tld_swap: return tld_swap(t, layout);
        case ObfuscationKind::ip_or_random_domain: return ip_or_random_domain(t, layout, rng);
    }
    throw std::invalid_argument("invalid obfuscation kind");
}

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            const int hi = hex_value(s[i + 1]);
            const int lo = hex_value(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

std::vector<SampleRecord> augment_dataset(const std::vector<SampleRecord>& records,
                                          const std::vector<ObfuscationKind>& kinds, std::size_t per_record,
                                          std::uint64_t seed, const UrlStatistics& stats,
                                          const std::vector<std::string>& brands) {
    if (per_record == 0) throw std::invalid_argument("per_record must be at least 1");
    if (kinds.empty()) throw std::invalid_argument("at least one obfuscation kind is required");

    std::vector<SampleRecord> out = records;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& source = records[i];
        if (source.label != 1) continue;
        for (std::size_t j = 0; j < per_record; ++j) {
            const std::uint64_t variant_seed = mix_seed(mix_seed(seed, i), j);
            for (std::size_t k = 0; k < kinds.size(); ++k) {
                const auto kind = kinds[(j + k) % kinds.size()];
                try {
                    auto variant = generate_variant(source.url, kind, variant_seed);
                    const auto url_features = extract_url_features(variant, stats.char_model, stats.tld_table, brands);
                    SampleRecord r;
                    r.embedding_key = embedding_key(variant);
                    r.url = std::move(variant);
                    r.label = 1;
                    const auto u = url_features.to_array();
                    std::copy(u.begin(), u.end(), r.features.begin());
                    std::copy(source.features.begin() + kUrlFeatureCount, source.features.end(),
                              r.features.begin() + kUrlFeatureCount);
                    out.push_back(std::move(r));
                    break;
                } catch (const NothingToObfuscate&) {
                } catch (const MalformedUrl&) {
                    break;
                }
            }
        }
    }
    return out;
}

}  // namespace phishrl
