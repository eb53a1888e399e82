#include "doctest.h"

#include <cmath>
#include <map>
#include <string>

#include "phishrl/errors.hpp"
#include "phishrl/rng.hpp"
#include "phishrl/url_features.hpp"

using namespace phishrl;

TEST_CASE("parse_url decomposes scheme, subdomains and registrable domain") {
    const auto p = parse_url("https://a.b.example.com/p?q=1");
    CHECK(p.scheme == "https");
    CHECK(p.host == "a.b.example.com");
    CHECK(p.subdomains == std::vector<std::string>{"a", "b"});
    CHECK(p.registrable_domain == "example.com");
    CHECK(p.tld == "com");
    CHECK(p.path == "/p");
    CHECK(p.query == "q=1");
    CHECK(p.domain_label() == "example");
}

TEST_CASE("parse_url flags IPv4 hosts and leaves tld empty") {
    const auto p = parse_url("http://192.168.0.1/login");
    CHECK(p.is_ip_host);
    CHECK(p.tld.empty());
    CHECK(p.path == "/login");
}

TEST_CASE("parse_url defaults the scheme") {
    const auto p = parse_url("example.com");
    CHECK(p.scheme == "http");
    CHECK(p.host == "example.com");
}

TEST_CASE("parse_url keeps port, fragment and lowercases host") {
    const auto p = parse_url("HTTP://WWW.Example.COM:8080/A/b#Top");
    CHECK(p.scheme == "http");
    CHECK(p.host == "www.example.com");
    REQUIRE(p.port.has_value());
    CHECK(*p.port == "8080");
    CHECK(p.path == "/A/b");
    CHECK(p.fragment == "Top");
}

TEST_CASE("parse_url rejects strings without a host") {
    CHECK_THROWS_AS(parse_url(""), MalformedUrl);
    CHECK_THROWS_AS(parse_url("   "), MalformedUrl);
    CHECK_THROWS_AS(parse_url("http://"), MalformedUrl);
}

TEST_CASE("parse_url is idempotent on its normalized output") {
    for (const char* raw : {"https://a.b.example.com/p?q=1", "example.com", "HTTP://Shop.Example.co.uk:81/x?y#z",
                            "http://192.168.0.1/login", "http://user@evil.com/paypal", "http://[::1]:8080/a"}) {
        CAPTURE(raw);
        const auto once = parse_url(raw);
        const auto twice = parse_url(once.to_string());
        CHECK(once == twice);
    }
}

TEST_CASE("IP literal detection") {
    CHECK(is_ipv4_literal("10.0.0.1"));
    CHECK_FALSE(is_ipv4_literal("10.0.0"));
    CHECK_FALSE(is_ipv4_literal("256.1.1.1"));
    CHECK(is_ip_literal("[::1]"));
    CHECK_FALSE(is_ip_literal("example.com"));
}

TEST_CASE("fit_char_model applies add-one smoothing with a reserved unseen symbol") {
    const auto m = fit_char_model({"aa"});
    // (2 + 1) / (2 + 1 + 1) and 1 / 4 for anything unseen.
    CHECK(m.probability('a') == doctest::Approx(3.0 / 4.0).epsilon(1e-15));
    CHECK(m.probability('z') == doctest::Approx(1.0 / 4.0).epsilon(1e-15));
    CHECK(m.smoothing_mass() == doctest::Approx(0.25));
    CHECK(m.alphabet_size() == 1);
}

TEST_CASE("fit_char_model is symmetric for equal counts and rejects an empty corpus") {
    const auto m = fit_char_model({"abab", "ba"});
    CHECK(m.probability('a') == m.probability('b'));
    CHECK_THROWS_AS(fit_char_model({}), EmptyCorpus);
}

TEST_CASE("char_log_prob closed forms") {
    std::map<unsigned char, double> uniform;
    for (int c = 0; c < 64; ++c) uniform[static_cast<unsigned char>('0' + c)] = 1.0 / 64.0;
    const auto u = CharDistribution::from_probabilities(uniform, 0.0);
    CHECK(char_log_prob("0123456789", u) == doctest::Approx(10.0 * std::log(1.0 / 64.0)).epsilon(1e-12));
    CHECK(char_log_prob("", u) == 0.0);

    const auto ab = CharDistribution::from_probabilities({{'a', 0.5}, {'b', 0.25}}, 0.25);
    CHECK(char_log_prob("ab", ab) == doctest::Approx(std::log(0.5) + std::log(0.25)).epsilon(1e-12));
    CHECK(char_log_prob("ab", ab) == doctest::Approx(-2.0794).epsilon(1e-4));
}

TEST_CASE("from_probabilities validates its mass") {
    CHECK_THROWS(CharDistribution::from_probabilities({{'a', 0.5}}, 0.1));
    CHECK_THROWS(CharDistribution::from_probabilities({{'a', 0.0}, {'b', 0.9}}, 0.1));
}

TEST_CASE("char_log_prob is additive over any split") {
    const auto m = fit_char_model({"https://www.example.com/", "http://shop.example.org/cart?id=7"});
    Rng rng(11);
    const std::string s = "http://paypa1-secure.example.xyz/login?acct=%41";
    for (int trial = 0; trial < 20; ++trial) {
        const auto cut = static_cast<std::size_t>(rng.uniform_index(s.size() + 1));
        CHECK(char_log_prob(s, m) ==
              doctest::Approx(char_log_prob(s.substr(0, cut), m) + char_log_prob(s.substr(cut), m)).epsilon(1e-12));
    }
}

TEST_CASE("corpus URLs score above same-length unseen strings") {
    const std::vector<std::string> corpus{"https://www.example.com/", "http://news.site.org/a"};
    const auto m = fit_char_model(corpus);
    for (const auto& url : corpus) {
        const std::string unseen(url.size(), '\x01');
        CHECK(char_log_prob(url, m) > char_log_prob(unseen, m));
    }
}

TEST_CASE("fit_tld_table holds relative frequencies") {
    const auto t = fit_tld_table({"a.com", "b.com", "c.org", "d.com", "not a url://"});
    CHECK(t.at("com") == doctest::Approx(0.75));
    CHECK(t.at("org") == doctest::Approx(0.25));
}

TEST_CASE("extract_url_features counts on a plain https URL") {
    const auto m = fit_char_model({"https://example.com/"});
    const TldTable tlds{{"com", 0.6}};
    const auto f = extract_url_features("https://example.com/login", m, tlds);
    CHECK(f.URLLength == 25);
    CHECK(f.IsHTTPS == 1);
    CHECK(f.NoOfSubDomain == 0);
    CHECK(f.IsDomainIP == 0);
    CHECK(f.NoOfDegitsInURL == 0);
    CHECK(f.DomainLength == 11);
    CHECK(f.TLDLength == 3);
    CHECK(f.TLDLegitimateProb == doctest::Approx(0.6));
    CHECK(f.URLCharProb == doctest::Approx(char_log_prob("https://example.com/login", m)));
    CHECK(f.HasObfuscation == 0);
}

TEST_CASE("extract_url_features counts percent escapes as obfuscation") {
    const auto m = fit_char_model({"http://example.com/"});
    const auto f = extract_url_features("http://example.com/%32%31", m, {});
    CHECK(f.NoOfObfuscatedChar == 2);
    CHECK(f.HasObfuscation == 1);
    CHECK(f.ObfuscationRatio == doctest::Approx(2.0 / 25.0));
    CHECK(f.TLDLegitimateProb == 0.0);
}

TEST_CASE("extract_url_features counts subdomain labels") {
    const auto m = fit_char_model({"http://example.com/"});
    CHECK(extract_url_features("http://a.b.c.example.com", m, {}).NoOfSubDomain == 3);
    CHECK(extract_url_features("http://192.168.0.1/x", m, {}).IsDomainIP == 1);
}

TEST_CASE("ratio features stay consistent with their counts") {
    const auto m = fit_char_model({"http://example.com/"});
    const std::string url = "http://ex4mple.com/a?b=1&c=2";
    const auto f = extract_url_features(url, m, {});
    CHECK(f.NoOfEqualsInURL == 2);
    CHECK(f.NoOfQMarkInURL == 1);
    CHECK(f.NoOfAmpersandInURL == 1);
    CHECK(f.NoOfDegitsInURL == 3);
    CHECK(f.DeditRatioInURL == doctest::Approx(f.NoOfDegitsInURL / f.URLLength));
    CHECK(f.LetterRatioInURL == doctest::Approx(f.NoOfLettersInURL / f.URLLength));
    // ":", "/" x3, ".", "?", "=" x2, "&": every non-alphanumeric byte.
    CHECK(f.NoOfOtherSpecialCharsInURL == 5);
    CHECK(f.SpacialCharRatioInURL == doctest::Approx(9.0 / f.URLLength));
    CHECK(f.to_array().size() == kUrlFeatureCount);
}

TEST_CASE("url_similarity_index") {
    CHECK(url_similarity_index("paypal.com", {"paypal.com"}) == doctest::Approx(1.0));
    CHECK(url_similarity_index("anything.com", {}) == 0.0);
    const double spoof = url_similarity_index("paypa1.com", {"paypal.com", "google.com"});
    CHECK(spoof == doctest::Approx(9.0 / 10.0));
}

TEST_CASE("char_continuation_rate bounds") {
    const double r = char_continuation_rate("aaabbb");
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    CHECK(char_continuation_rate("") == 0.0);
}

TEST_CASE("punycode labels count as obfuscation") {
    const auto parts = parse_url("http://xn--pypal-4ve.com/");
    CHECK(count_obfuscated_chars("http://xn--pypal-4ve.com/", parts) == 1);
}
