#include "phishrl/url_features.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <cmath>

#include "phishrl/errors.hpp"

namespace phishrl {

namespace {

bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_ascii_alnum(unsigned char c) { return is_ascii_alpha(c) || is_ascii_digit(c); }
bool is_hex(unsigned char c) {
    return is_ascii_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::vector<std::string> split_labels(std::string_view host) {
    std::vector<std::string> labels;
    std::size_t start = 0;
    while (true) {
        const auto dot = host.find('.', start);
        if (dot == std::string_view::npos) {
            labels.emplace_back(host.substr(start));
            break;
        }
        labels.emplace_back(host.substr(start, dot - start));
        start = dot + 1;
    }
    return labels;
}

// Length of a leading "scheme://" prefix, or 0 when there is none.
std::size_t scheme_prefix_length(std::string_view t) {
    const auto pos = t.find("://");
    if (pos == std::string_view::npos || pos == 0) return 0;
    if (!is_ascii_alpha(static_cast<unsigned char>(t[0]))) return 0;
    for (std::size_t i = 1; i < pos; ++i) {
        const auto c = static_cast<unsigned char>(t[i]);
        if (!is_ascii_alnum(c) && c != '+' && c != '-' && c != '.') return 0;
    }
    return pos + 3;
}

struct AuthoritySplit {
    std::size_t scheme_len = 0;
    std::size_t host_begin = 0;
    std::size_t host_end = 0;
    std::optional<std::string_view> port;
    std::size_t authority_end = 0;
};

AuthoritySplit split_authority(std::string_view t) {
    AuthoritySplit out;
    out.scheme_len = scheme_prefix_length(t);
    const std::size_t start = out.scheme_len;
    std::size_t end = t.find_first_of("/?#", start);
    if (end == std::string_view::npos) end = t.size();
    out.authority_end = end;
    const std::string_view authority = t.substr(start, end - start);

    std::size_t host_len = authority.size();
    if (!authority.empty() && authority.front() == '[') {
        const auto close = authority.find(']');
        if (close != std::string_view::npos) {
            host_len = close + 1;
            if (host_len < authority.size() && authority[host_len] == ':') {
                out.port = authority.substr(host_len + 1);
            }
        }
    } else {
        const auto colon = authority.rfind(':');
        if (colon != std::string_view::npos) {
            const auto tail = authority.substr(colon + 1);
            if (std::all_of(tail.begin(), tail.end(),
                            [](char c) { return is_ascii_digit(static_cast<unsigned char>(c)); })) {
                host_len = colon;
                out.port = tail;
            }
        }
    }
    out.host_begin = start;
    out.host_end = start + host_len;
    const std::string_view host = t.substr(out.host_begin, host_len);
    if (host.empty()) throw MalformedUrl("no host in URL '" + std::string(t) + "'");
    for (const char ch : host) {
        const auto c = static_cast<unsigned char>(ch);
        if (c <= 0x20 || c == 0x7f) throw MalformedUrl("invalid host in URL '" + std::string(t) + "'");
    }
    return out;
}

}  // namespace

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool is_ipv4_literal(std::string_view host) {
    const std::string h(host);
    in_addr addr{};
    return inet_pton(AF_INET, h.c_str(), &addr) == 1;
}

bool is_ip_literal(std::string_view host) {
    if (host.size() > 2 && host.front() == '[' && host.back() == ']') {
        const std::string inner(host.substr(1, host.size() - 2));
        in6_addr addr{};
        return inet_pton(AF_INET6, inner.c_str(), &addr) == 1;
    }
    return is_ipv4_literal(host);
}

HostSpan locate_host(std::string_view raw) {
    const auto t = trim(raw);
    if (t.empty()) throw MalformedUrl("empty URL");
    const auto split = split_authority(t);
    return {split.host_begin, split.host_end};
}

UrlParts parse_url(std::string_view raw) {
    const auto t = trim(raw);
    if (t.empty()) throw MalformedUrl("empty URL");
    const auto split = split_authority(t);

    UrlParts parts;
    parts.scheme = split.scheme_len > 0 ? to_lower_ascii(t.substr(0, split.scheme_len - 3)) : "http";
    parts.host = to_lower_ascii(t.substr(split.host_begin, split.host_end - split.host_begin));
    if (parts.host.size() > 1 && parts.host.back() == '.') parts.host.pop_back();
    if (split.port) parts.port = std::string(*split.port);

    std::string_view rest = t.substr(split.authority_end);
    const auto hash = rest.find('#');
    if (hash != std::string_view::npos) {
        parts.fragment = std::string(rest.substr(hash + 1));
        rest = rest.substr(0, hash);
    }
    const auto qmark = rest.find('?');
    if (qmark != std::string_view::npos) {
        parts.query = std::string(rest.substr(qmark + 1));
        rest = rest.substr(0, qmark);
    }
    parts.path = std::string(rest);

    parts.is_ip_host = is_ip_literal(parts.host);
    if (parts.is_ip_host) {
        parts.registrable_domain = parts.host;
        return parts;
    }
    auto labels = split_labels(parts.host);
    parts.tld = labels.back();
    if (labels.size() >= 2) {
        parts.registrable_domain = labels[labels.size() - 2] + "." + labels.back();
        parts.subdomains.assign(labels.begin(), labels.end() - 2);
    } else {
        parts.registrable_domain = parts.host;
    }
    return parts;
}

std::string UrlParts::to_string() const {
    std::string out = scheme + "://" + host;
    if (port) out += ":" + *port;
    out += path;
    if (!query.empty()) out += "?" + query;
    if (!fragment.empty()) out += "#" + fragment;
    return out;
}

std::string UrlParts::domain_label() const {
    if (is_ip_host || registrable_domain == tld) return registrable_domain;
    return registrable_domain.substr(0, registrable_domain.size() - tld.size() - 1);
}

CharDistribution CharDistribution::from_probabilities(const std::map<unsigned char, double>& probs,
                                                      double smoothing_mass) {
    if (!(smoothing_mass >= 0.0) || smoothing_mass > 1.0) {
        throw std::invalid_argument("smoothing mass must lie in [0, 1]");
    }
    CharDistribution d;
    double total = smoothing_mass;
    for (const auto& [c, p] : probs) {
        if (!(p > 0.0)) throw std::invalid_argument("character probabilities must be positive");
        d.prob_[c] = p;
        d.seen_[c] = true;
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("character distribution does not sum to 1");
    }
    d.smoothing_mass_ = smoothing_mass;
    d.alphabet_size_ = probs.size();
    return d;
}

double CharDistribution::probability(unsigned char c) const {
    return seen_[c] ? prob_[c] : smoothing_mass_;
}

std::map<unsigned char, double> CharDistribution::probabilities() const {
    std::map<unsigned char, double> out;
    for (std::size_t c = 0; c < 256; ++c) {
        if (seen_[c]) out.emplace(static_cast<unsigned char>(c), prob_[c]);
    }
    return out;
}

CharDistribution fit_char_model(const std::vector<std::string>& benign_urls) {
    if (benign_urls.empty()) throw EmptyCorpus("cannot fit a character model on an empty corpus");
    std::array<std::size_t, 256> counts{};
    std::size_t total = 0;
    for (const auto& url : benign_urls) {
        for (const char ch : url) {
            ++counts[static_cast<unsigned char>(ch)];
            ++total;
        }
    }
    const auto alphabet =
        static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto n) { return n > 0; }));
    const double denom = static_cast<double>(total + alphabet + 1);
    std::map<unsigned char, double> probs;
    for (std::size_t c = 0; c < 256; ++c) {
        if (counts[c] > 0) probs.emplace(static_cast<unsigned char>(c), static_cast<double>(counts[c] + 1) / denom);
    }
    return CharDistribution::from_probabilities(probs, 1.0 / denom);
}

double char_log_prob(std::string_view s, const CharDistribution& model) {
    double sum = 0.0;
    for (const char ch : s) sum += std::log(model.probability(static_cast<unsigned char>(ch)));
    return sum;
}

TldTable fit_tld_table(const std::vector<std::string>& urls) {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& url : urls) {
        try {
            const auto parts = parse_url(url);
            if (parts.tld.empty()) continue;
            ++counts[parts.tld];
            ++total;
        } catch (const MalformedUrl&) {
        }
    }
    TldTable table;
    for (const auto& [tld, n] : counts) table[tld] = static_cast<double>(n) / static_cast<double>(total);
    return table;
}

const std::vector<std::string>& default_brand_domains() {
    static const std::vector<std::string> brands = {
        "google.com",    "paypal.com",   "apple.com",     "microsoft.com",  "amazon.com",
        "facebook.com",  "netflix.com",  "instagram.com", "linkedin.com",   "twitter.com",
        "yahoo.com",     "outlook.com",  "dropbox.com",   "ebay.com",       "icloud.com",
        "adobe.com",     "coinbase.com", "chase.com",     "wellsfargo.com", "bankofamerica.com",
    };
    return brands;
}

const std::array<const char*, kUrlFeatureCount> kUrlFeatureNames = {
    "URLLength",          "DomainLength",      "IsDomainIP",
    "URLSimilarityIndex", "CharContinuationRate", "TLDLegitimateProb",
    "URLCharProb",        "TLDLength",         "NoOfSubDomain",
    "HasObfuscation",     "NoOfObfuscatedChar", "ObfuscationRatio",
    "NoOfLettersInURL",   "LetterRatioInURL",  "NoOfDegitsInURL",
    "DeditRatioInURL",    "NoOfEqualsInURL",   "NoOfQMarkInURL",
    "NoOfAmpersandInURL", "NoOfOtherSpecialCharsInURL", "SpacialCharRatioInURL",
    "IsHTTPS",
};

std::array<double, kUrlFeatureCount> UrlFeatureVector::to_array() const {
    return {URLLength,          DomainLength,      IsDomainIP,         URLSimilarityIndex,
            CharContinuationRate, TLDLegitimateProb, URLCharProb,        TLDLength,
            NoOfSubDomain,      HasObfuscation,    NoOfObfuscatedChar, ObfuscationRatio,
            NoOfLettersInURL,   LetterRatioInURL,  NoOfDegitsInURL,    DeditRatioInURL,
            NoOfEqualsInURL,    NoOfQMarkInURL,    NoOfAmpersandInURL, NoOfOtherSpecialCharsInURL,
            SpacialCharRatioInURL, IsHTTPS};
}

double url_similarity_index(std::string_view host, const std::vector<std::string>& brands) {
    double best = 0.0;
    std::vector<std::size_t> prev, cur;
    for (const auto& brand : brands) {
        const std::size_t n = host.size(), m = brand.size();
        if (n == 0 || m == 0) continue;
        prev.assign(m + 1, 0);
        cur.assign(m + 1, 0);
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 1; j <= m; ++j) {
                cur[j] = host[i - 1] == brand[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
            }
            std::swap(prev, cur);
        }
        best = std::max(best, static_cast<double>(prev[m]) / static_cast<double>(std::max(n, m)));
    }
    return best;
}

double char_continuation_rate(std::string_view s) {
    if (s.size() <= 1) return 0.0;
    std::size_t repeats = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i] == s[i - 1]) ++repeats;
    }
    return static_cast<double>(repeats) / static_cast<double>(s.size() - 1);
}

std::size_t count_obfuscated_chars(std::string_view raw, const UrlParts& parts) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < raw.size();) {
        const auto c = static_cast<unsigned char>(raw[i]);
        if (c == '%' && i + 2 < raw.size() && is_hex(static_cast<unsigned char>(raw[i + 1])) &&
            is_hex(static_cast<unsigned char>(raw[i + 2]))) {
            ++count;
            i += 3;
            continue;
        }
        if (c >= 0x80) ++count;
        ++i;
    }
    if (!parts.is_ip_host) {
        for (const auto& label : split_labels(parts.host)) {
            if (label.rfind("xn--", 0) == 0) ++count;
        }
    }
    return count;
}

UrlFeatureVector extract_url_features(std::string_view raw, const CharDistribution& model,
                                      const TldTable& tld_prob_table,
                                      const std::vector<std::string>& brands) {
    const auto t = trim(raw);
    const UrlParts parts = parse_url(t);
    const auto len = static_cast<double>(t.size());

    UrlFeatureVector f;
    f.URLLength = len;
    f.DomainLength = static_cast<double>(parts.host.size());
    f.IsDomainIP = parts.is_ip_host ? 1 : 0;
    f.URLSimilarityIndex = url_similarity_index(parts.host, brands);
    f.CharContinuationRate = char_continuation_rate(t);
    if (const auto it = tld_prob_table.find(parts.tld); it != tld_prob_table.end() && !parts.tld.empty()) {
        f.TLDLegitimateProb = it->second;
    }
    f.URLCharProb = char_log_prob(t, model);
    f.TLDLength = static_cast<double>(parts.tld.size());
    f.NoOfSubDomain = static_cast<double>(parts.subdomains.size());

    const auto obfuscated = count_obfuscated_chars(t, parts);
    f.NoOfObfuscatedChar = static_cast<double>(obfuscated);
    f.HasObfuscation = obfuscated > 0 ? 1 : 0;
    f.ObfuscationRatio = len > 0 ? static_cast<double>(obfuscated) / len : 0.0;

    std::size_t letters = 0, digits = 0, equals = 0, qmarks = 0, amps = 0, other = 0, non_alnum = 0;
    for (const char ch : t) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_ascii_alpha(c)) {
            ++letters;
            continue;
        }
        if (is_ascii_digit(c)) {
            ++digits;
            continue;
        }
        ++non_alnum;
        if (c == '=') {
            ++equals;
        } else if (c == '?') {
            ++qmarks;
        } else if (c == '&') {
            ++amps;
        } else if (c >= 0x20 && c < 0x7f) {
            ++other;
        }
    }
    f.NoOfLettersInURL = static_cast<double>(letters);
    f.LetterRatioInURL = len > 0 ? static_cast<double>(letters) / len : 0.0;
    f.NoOfDegitsInURL = static_cast<double>(digits);
    f.DeditRatioInURL = len > 0 ? static_cast<double>(digits) / len : 0.0;
    f.NoOfEqualsInURL = static_cast<double>(equals);
    f.NoOfQMarkInURL = static_cast<double>(qmarks);
    f.NoOfAmpersandInURL = static_cast<double>(amps);
    f.NoOfOtherSpecialCharsInURL = static_cast<double>(other);
    f.SpacialCharRatioInURL = len > 0 ? static_cast<double>(non_alnum) / len : 0.0;
    f.IsHTTPS = parts.scheme == "https" ? 1 : 0;
    return f;
}

}  // namespace phishrl
