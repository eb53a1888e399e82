#include "doctest.h"

#include <algorithm>
#include <string>

#include "fixtures.hpp"
#include "phishrl/adversary.hpp"
#include "phishrl/errors.hpp"
#include "phishrl/idn.hpp"

using namespace phishrl;

TEST_CASE("reference variant examples") {
    CHECK(generate_variant("google.com", ObfuscationKind::homoglyph, 1) == "g00gle.com");
    CHECK(generate_variant("example.com/21", ObfuscationKind::percent_encode, 1) == "example.com/%32%31");
    CHECK(generate_variant("example.com", ObfuscationKind::tld_swap, 1) == "example.co");
}

TEST_CASE("homoglyph keeps length and changes a character") {
    for (const char* url : {"paypal.net", "http://login.example.org/verify", "amazon.com"}) {
        CAPTURE(url);
        const auto v = generate_variant(url, ObfuscationKind::homoglyph, 0);
        CHECK(v.size() == std::string(url).size());
        CHECK(v != url);
    }
    CHECK_THROWS_AS(generate_variant("xyz.xyz", ObfuscationKind::homoglyph, 0), NothingToObfuscate);
}

TEST_CASE("percent encoding decodes back to the original") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        std::string url = "http://host" + std::to_string(i) + ".com/p" + std::to_string(rng.next() % 1000) + "?q=a b";
        const auto v = generate_variant(url, ObfuscationKind::percent_encode, rng.next());
        CHECK(v != url);
        CHECK(percent_decode(v) == url);
    }
    CHECK(percent_decode("%4") == "%4");
    CHECK(percent_decode("%zz%41") == "%zzA");
}

TEST_CASE("punycode variant carries an ACE label that decodes to Unicode") {
    const auto v = generate_variant("http://paypal.com/login", ObfuscationKind::punycode, 5);
    const auto start = v.find("xn--");
    REQUIRE(start != std::string::npos);
    const auto end = v.find_first_of("./", start);
    const auto label = v.substr(start, end - start);
    const auto unicode = idn::label_to_unicode(label);
    CHECK(unicode != label);
    CHECK(idn::label_to_ascii(unicode) == label);
}

TEST_CASE("idn helpers follow the RFC 3492 sample") {
    // Sample string (A) from the RFC, Arabic (Egyptian).
    const std::u32string arabic = {0x0644, 0x064A, 0x0647, 0x0645, 0x0627, 0x0628, 0x062A, 0x0643, 0x0644,
                                   0x0645, 0x0648, 0x0634, 0x0639, 0x0631, 0x0628, 0x064A, 0x061F};
    CHECK(idn::punycode_encode(arabic) == "egbpdaj6bu4bxfgehfvwxn");
    CHECK(idn::punycode_decode("egbpdaj6bu4bxfgehfvwxn") == arabic);
    CHECK(idn::label_to_ascii("example") == "example");
    CHECK(idn::utf8_decode(idn::utf8_encode(arabic)) == arabic);
}

TEST_CASE("variants are deterministic for a fixed seed") {
    for (const auto kind : all_obfuscation_kinds()) {
        CAPTURE(to_string(kind));
        const auto a = generate_variant("http://secure.paypal.com/login/21", kind, 77);
        const auto b = generate_variant("http://secure.paypal.com/login/21", kind, 77);
        CHECK(a == b);
        CHECK(a != "http://secure.paypal.com/login/21");
    }
}

TEST_CASE("kind names parse back") {
    for (const auto kind : all_obfuscation_kinds()) CHECK(parse_obfuscation_kind(to_string(kind)) == kind);
    CHECK_THROWS_AS(parse_obfuscation_kind("zalgo"), std::invalid_argument);
}

TEST_CASE("augment_dataset adds variants for phishing rows only") {
    const auto records = fixtures::separable_records(20, 4);  // 10 of each class
    const auto stats = fit_url_statistics(records);
    const auto out = augment_dataset(records, {ObfuscationKind::homoglyph}, 1, 9, stats);
    REQUIRE(out.size() == 30);
    CHECK(std::equal(records.begin(), records.end(), out.begin()));
    for (std::size_t i = records.size(); i < out.size(); ++i) {
        CHECK(out[i].label == 1);
        CHECK(out[i].embedding_key == embedding_key(out[i].url));
        const auto fresh = extract_url_features(out[i].url, stats.char_model, stats.tld_table);
        const auto arr = fresh.to_array();
        CHECK(std::equal(arr.begin(), arr.end(), out[i].features.begin()));
    }
    CHECK(augment_dataset(records, {ObfuscationKind::homoglyph}, 1, 9, stats) == out);
    CHECK_THROWS_AS(augment_dataset(records, {ObfuscationKind::homoglyph}, 0, 9, stats), std::invalid_argument);
}
