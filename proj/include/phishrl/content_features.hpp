#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace phishrl {

struct HtmlDocument {
    std::string url;
    std::string body;
    std::map<std::string, std::string> headers;
    std::vector<std::string> redirect_chain;  // origin first, at most 5 hops after it
};

inline constexpr std::size_t kContentFeatureCount = 28;

struct ContentFeatureVector {
    double LineOfCode = 0;
    double LargestLineLength = 0;
    double HasTitle = 0;
    double DomainTitleMatchScore = 0;
    double URLTitleMatchScore = 0;
    double HasFavicon = 0;
    double Robots = 0;
    double IsResponsive = 0;
    double HasDescription = 0;
    double NoOfURLRedirect = 0;
    double NoOfSelfRedirect = 0;
    double NoOfPopup = 0;
    double NoOfIFrame = 0;
    double HasExternalFormSubmit = 0;
    double HasSocialNet = 0;
    double HasSubmitButton = 0;
    double HasHiddenFields = 0;
    double HasPasswordField = 0;
    double NoOfSelfRef = 0;
    double NoOfEmptyRef = 0;
    double NoOfExternalRef = 0;
    double Bank = 0;
    double Pay = 0;
    double Crypto = 0;
    double HasCopyrightInfo = 0;
    double NoOfImage = 0;
    double NoOfCSS = 0;
    double NoOfJS = 0;

    std::array<double, kContentFeatureCount> to_array() const;
    bool operator==(const ContentFeatureVector&) const = default;
};

extern const std::array<const char*, kContentFeatureCount> kContentFeatureNames;

// Lowercase maximal ASCII-alphanumeric runs.
std::vector<std::string> word_tokens(std::string_view text);

double title_jaccard(std::string_view a, std::string_view b);

// One scanned tag: lowercased name, lowercased attribute names, raw values.
struct HtmlTag {
    std::string name;
    bool closing = false;
    std::map<std::string, std::string> attributes;
};

struct ScannedHtml {
    std::vector<HtmlTag> tags;
    std::string visible_text;  // text outside tags, script and style
    std::string script_text;   // concatenated inline <script> contents
    std::string title;         // text of the first <title> element
    bool has_title_element = false;
};

// Tolerant tag-level scanner; never throws on malformed markup.
ScannedHtml scan_html(std::string_view body);

ContentFeatureVector extract_content_features(const HtmlDocument& doc);

}  // namespace phishrl
