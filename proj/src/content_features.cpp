#include "phishrl/content_features.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include "phishrl/errors.hpp"
#include "phishrl/url_features.hpp"

namespace phishrl {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::isalnum(u) != 0;
}

// Case-insensitive search for an ASCII needle.
std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from) {
    if (needle.empty() || hay.size() < needle.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (lower(hay[i + j]) != lower(needle[j])) {
                match = false;
                break;
            }
        }
        if (match) return i;
    }
    return std::string_view::npos;
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

// Parses attributes from pos up to the closing '>'; returns the index after it.
std::size_t parse_attributes(std::string_view body, std::size_t pos, HtmlTag& tag, bool& self_closing) {
    const std::size_t n = body.size();
    self_closing = false;
    while (pos < n) {
        while (pos < n && is_space(body[pos])) ++pos;
        if (pos >= n) break;
        if (body[pos] == '>') return pos + 1;
        if (body[pos] == '/') {
            self_closing = true;
            ++pos;
            continue;
        }
        const std::size_t name_start = pos;
        while (pos < n && !is_space(body[pos]) && body[pos] != '=' && body[pos] != '>' && body[pos] != '/') ++pos;
        std::string name = to_lower(body.substr(name_start, pos - name_start));
        while (pos < n && is_space(body[pos])) ++pos;
        std::string value;
        if (pos < n && body[pos] == '=') {
            ++pos;
            while (pos < n && is_space(body[pos])) ++pos;
            if (pos < n && (body[pos] == '"' || body[pos] == '\'')) {
                const char quote = body[pos++];
                const auto close = body.find(quote, pos);
                const std::size_t end = close == std::string_view::npos ? n : close;
                value = std::string(body.substr(pos, end - pos));
                pos = close == std::string_view::npos ? n : close + 1;
            } else {
                const std::size_t value_start = pos;
                while (pos < n && !is_space(body[pos]) && body[pos] != '>') ++pos;
                value = std::string(body.substr(value_start, pos - value_start));
            }
        }
        if (!name.empty()) tag.attributes.emplace(std::move(name), std::move(value));
    }
    return n;
}

std::string attr(const HtmlTag& tag, const std::string& name) {
    const auto it = tag.attributes.find(name);
    return it == tag.attributes.end() ? std::string{} : it->second;
}

bool has_token(std::string_view text, std::string_view word) {
    for (const auto& t : word_tokens(text)) {
        if (t == word) return true;
    }
    return false;
}

enum class RefKind { Self, Empty, External };

struct PageOrigin {
    std::optional<UrlParts> parts;
};

std::optional<UrlParts> try_parse(std::string_view url) {
    try {
        return parse_url(url);
    } catch (const MalformedUrl&) {
        return std::nullopt;
    }
}

// True when the reference carries its own host ("scheme://" or "//").
bool has_authority(std::string_view ref) { return ref.find("://") != std::string_view::npos || ref.rfind("//", 0) == 0; }

bool has_foreign_scheme(std::string_view ref) {
    const auto colon = ref.find(':');
    if (colon == std::string_view::npos || colon == 0) return false;
    for (std::size_t i = 0; i < colon; ++i) {
        const char c = ref[i];
        if (!(is_alnum(c) || c == '+' || c == '-' || c == '.')) return false;
    }
    return true;
}

RefKind classify_href(std::string_view href_raw, const PageOrigin& origin) {
    const auto href = trim(href_raw);
    const std::string lowered = to_lower(href);
    if (href.empty() || href == "#" || lowered == "javascript:void(0)" || lowered == "javascript:void(0);") {
        return RefKind::Empty;
    }
    if (has_authority(href)) {
        const std::string absolute = href.rfind("//", 0) == 0 ? "http:" + std::string(href) : std::string(href);
        const auto parts = try_parse(absolute);
        if (parts && origin.parts && parts->registrable_domain == origin.parts->registrable_domain) {
            return RefKind::Self;
        }
        return RefKind::External;
    }
    if (has_foreign_scheme(href)) return RefKind::External;
    return RefKind::Self;
}

const std::set<std::string>& social_domains() {
    static const std::set<std::string> domains = {
        "facebook.com", "twitter.com", "x.com",      "instagram.com", "linkedin.com",
        "youtube.com",  "tiktok.com",  "pinterest.com", "reddit.com", "t.me",
    };
    return domains;
}

bool rel_contains(const HtmlTag& tag, std::string_view word) {
    for (const auto& t : word_tokens(attr(tag, "rel"))) {
        if (t == word) return true;
    }
    return false;
}

}  // namespace

const std::array<const char*, kContentFeatureCount> kContentFeatureNames = {
    "LineOfCode",       "LargestLineLength",     "HasTitle",        "DomainTitleMatchScore",
    "URLTitleMatchScore", "HasFavicon",          "Robots",          "IsResponsive",
    "HasDescription",   "NoOfURLRedirect",       "NoOfSelfRedirect", "NoOfPopup",
    "NoOfIFrame",       "HasExternalFormSubmit", "HasSocialNet",    "HasSubmitButton",
    "HasHiddenFields",  "HasPasswordField",      "NoOfSelfRef",     "NoOfEmptyRef",
    "NoOfExternalRef",  "Bank",                  "Pay",             "Crypto",
    "HasCopyrightInfo", "NoOfImage",             "NoOfCSS",         "NoOfJS",
};

std::array<double, kContentFeatureCount> ContentFeatureVector::to_array() const {
    return {LineOfCode,       LargestLineLength,     HasTitle,         DomainTitleMatchScore,
            URLTitleMatchScore, HasFavicon,          Robots,           IsResponsive,
            HasDescription,   NoOfURLRedirect,       NoOfSelfRedirect, NoOfPopup,
            NoOfIFrame,       HasExternalFormSubmit, HasSocialNet,     HasSubmitButton,
            HasHiddenFields,  HasPasswordField,      NoOfSelfRef,      NoOfEmptyRef,
            NoOfExternalRef,  Bank,                  Pay,              Crypto,
            HasCopyrightInfo, NoOfImage,             NoOfCSS,          NoOfJS};
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char c : text) {
        if (is_alnum(c)) {
            current.push_back(lower(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

double title_jaccard(std::string_view a, std::string_view b) {
    const auto ta = word_tokens(a);
    const auto tb = word_tokens(b);
    const std::set<std::string> sa(ta.begin(), ta.end());
    const std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& t : sa) common += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - common;
    return static_cast<double>(common) / static_cast<double>(uni);
}

ScannedHtml scan_html(std::string_view body) {
    ScannedHtml out;
    const std::size_t n = body.size();
    std::size_t pos = 0;
    while (pos < n) {
        if (body[pos] != '<') {
            out.visible_text.push_back(body[pos++]);
            continue;
        }
        if (body.compare(pos, 4, "<!--") == 0) {
            const auto end = body.find("-->", pos + 4);
            pos = end == std::string_view::npos ? n : end + 3;
            continue;
        }
        const char next = pos + 1 < n ? body[pos + 1] : '\0';
        if (next == '!' || next == '?') {
            const auto end = body.find('>', pos);
            pos = end == std::string_view::npos ? n : end + 1;
            continue;
        }
        const bool closing = next == '/';
        const std::size_t name_start = pos + (closing ? 2 : 1);
        if (name_start >= n || !std::isalpha(static_cast<unsigned char>(body[name_start]))) {
            out.visible_text.push_back(body[pos++]);
            continue;
        }
        std::size_t name_end = name_start;
        while (name_end < n && (is_alnum(body[name_end]) || body[name_end] == '-' || body[name_end] == ':')) {
            ++name_end;
        }
        HtmlTag tag;
        tag.name = to_lower(body.substr(name_start, name_end - name_start));
        tag.closing = closing;
        bool self_closing = false;
        pos = parse_attributes(body, name_end, tag, self_closing);
        out.visible_text.push_back(' ');

        const bool raw_text = !closing && !self_closing &&
                              (tag.name == "script" || tag.name == "style" || tag.name == "title");
        const std::string name = tag.name;
        out.tags.push_back(std::move(tag));
        if (!raw_text) continue;

        const auto end = ifind(body, "</" + name, pos);
        const std::size_t content_end = end == std::string_view::npos ? n : end;
        const auto content = body.substr(pos, content_end - pos);
        if (name == "script") {
            out.script_text.append(content);
            out.script_text.push_back('\n');
        } else if (name == "title") {
            if (!out.has_title_element) {
                out.has_title_element = true;
                out.title = std::string(trim(content));
            }
            out.visible_text.append(content);
            out.visible_text.push_back(' ');
        }
        pos = content_end;
    }
    return out;
}

ContentFeatureVector extract_content_features(const HtmlDocument& doc) {
    ContentFeatureVector f;
    if (doc.body.empty()) return f;

    const std::string_view body = doc.body;
    std::size_t lines = 1, longest = 0, current = 0;
    for (const char c : body) {
        if (c == '\n') {
            ++lines;
            longest = std::max(longest, current);
            current = 0;
        } else {
            ++current;
        }
    }
    longest = std::max(longest, current);
    f.LineOfCode = static_cast<double>(lines);
    f.LargestLineLength = static_cast<double>(longest);

    const ScannedHtml html = scan_html(body);
    const PageOrigin origin{try_parse(doc.url)};

    if (!trim(html.title).empty()) {
        f.HasTitle = 1;
        f.DomainTitleMatchScore = origin.parts ? title_jaccard(html.title, origin.parts->domain_label()) : 0.0;
        f.URLTitleMatchScore = title_jaccard(html.title, doc.url);
    }

    for (const auto& [name, value] : doc.headers) {
        if (to_lower(name) == "x-robots-tag") f.Robots = 1;
    }

    if (!doc.redirect_chain.empty()) {
        f.NoOfURLRedirect = static_cast<double>(doc.redirect_chain.size() - 1);
        const auto first = try_parse(doc.redirect_chain.front());
        std::size_t self = 0;
        for (std::size_t i = 1; i < doc.redirect_chain.size(); ++i) {
            const auto hop = try_parse(doc.redirect_chain[i]);
            if (first && hop && hop->host == first->host) ++self;
        }
        f.NoOfSelfRedirect = static_cast<double>(self);
    }
    f.NoOfPopup = static_cast<double>(count_occurrences(html.script_text, "window.open("));

    std::string attribute_text;
    std::size_t self_refs = 0, empty_refs = 0, external_refs = 0;
    std::size_t images = 0, css = 0, js = 0, iframes = 0;
    for (const auto& tag : html.tags) {
        if (tag.closing) continue;
        for (const auto& [k, v] : tag.attributes) {
            attribute_text += v;
            attribute_text.push_back(' ');
        }
        const auto& name = tag.name;
        if (name == "img") {
            ++images;
        } else if (name == "iframe") {
            ++iframes;
        } else if (name == "script") {
            ++js;
        } else if (name == "style") {
            ++css;
        } else if (name == "link") {
            if (rel_contains(tag, "stylesheet")) ++css;
            if (rel_contains(tag, "icon")) f.HasFavicon = 1;
        } else if (name == "meta") {
            const auto meta_name = to_lower(trim(attr(tag, "name")));
            if (meta_name == "robots") f.Robots = 1;
            if (meta_name == "viewport") f.IsResponsive = 1;
            if (meta_name == "description") f.HasDescription = 1;
        } else if (name == "form") {
            const auto action = attr(tag, "action");
            if (classify_href(action, origin) == RefKind::External && !trim(action).empty()) {
                f.HasExternalFormSubmit = 1;
            }
        } else if (name == "input") {
            const auto type = to_lower(trim(attr(tag, "type")));
            if (type == "password") f.HasPasswordField = 1;
            if (type == "hidden") f.HasHiddenFields = 1;
            if (type == "submit" || type == "image") f.HasSubmitButton = 1;
        } else if (name == "button") {
            const auto type = to_lower(trim(attr(tag, "type")));
            if (type.empty() || type == "submit") f.HasSubmitButton = 1;
        } else if (name == "a") {
            const auto it = tag.attributes.find("href");
            if (it == tag.attributes.end()) continue;
            switch (classify_href(it->second, origin)) {
                case RefKind::Self: ++self_refs; break;
                case RefKind::Empty: ++empty_refs; break;
                case RefKind::External: ++external_refs; break;
            }
            if (has_authority(it->second)) {
                const auto href = std::string(trim(it->second));
                const auto parts = try_parse(href.rfind("//", 0) == 0 ? "http:" + href : href);
                if (parts && social_domains().count(parts->registrable_domain)) f.HasSocialNet = 1;
            }
        }
    }
    f.NoOfImage = static_cast<double>(images);
    f.NoOfCSS = static_cast<double>(css);
    f.NoOfJS = static_cast<double>(js);
    f.NoOfIFrame = static_cast<double>(iframes);
    f.NoOfSelfRef = static_cast<double>(self_refs);
    f.NoOfEmptyRef = static_cast<double>(empty_refs);
    f.NoOfExternalRef = static_cast<double>(external_refs);

    const std::string keyword_text = html.visible_text + " " + attribute_text;
    f.Bank = has_token(keyword_text, "bank") ? 1 : 0;
    f.Pay = has_token(keyword_text, "pay") ? 1 : 0;
    f.Crypto = has_token(keyword_text, "crypto") ? 1 : 0;
    f.HasCopyrightInfo = (html.visible_text.find("\xC2\xA9") != std::string::npos ||
                          ifind(html.visible_text, "&copy;", 0) != std::string_view::npos ||
                          has_token(html.visible_text, "copyright"))
                             ? 1
                             : 0;
    return f;
}

}  // namespace phishrl
