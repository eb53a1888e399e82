#include "phishrl/idn.hpp"

#include <cstdint>

#include "phishrl/errors.hpp"

namespace phishrl::idn {

namespace {

constexpr std::uint32_t kBase = 36;
constexpr std::uint32_t kTMin = 1;
constexpr std::uint32_t kTMax = 26;
constexpr std::uint32_t kSkew = 38;
constexpr std::uint32_t kDamp = 700;
constexpr std::uint32_t kInitialBias = 72;
constexpr std::uint32_t kInitialN = 128;

char encode_digit(std::uint32_t d) { return static_cast<char>(d < 26 ? 'a' + d : '0' + (d - 26)); }

std::uint32_t decode_digit(char c) {
    if (c >= '0' && c <= '9') return static_cast<std::uint32_t>(c - '0' + 26);
    if (c >= 'a' && c <= 'z') return static_cast<std::uint32_t>(c - 'a');
    if (c >= 'A' && c <= 'Z') return static_cast<std::uint32_t>(c - 'A');
    throw FormatError("invalid punycode digit");
}

std::uint32_t adapt(std::uint32_t delta, std::uint32_t num_points, bool first_time) {
    delta = first_time ? delta / kDamp : delta / 2;
    delta += delta / num_points;
    std::uint32_t k = 0;
    while (delta > ((kBase - kTMin) * kTMax) / 2) {
        delta /= kBase - kTMin;
        k += kBase;
    }
    return k + (kBase - kTMin + 1) * delta / (delta + kSkew);
}

std::uint32_t threshold(std::uint32_t k, std::uint32_t bias) {
    if (k <= bias) return kTMin;
    if (k >= bias + kTMax) return kTMax;
    return k - bias;
}

}  // namespace

std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (c < 0x80) {
            len = 1;
            cp = c;
        } else if ((c >> 5) == 0x6) {
            len = 2;
            cp = c & 0x1f;
        } else if ((c >> 4) == 0xe) {
            len = 3;
            cp = c & 0x0f;
        } else if ((c >> 3) == 0x1e) {
            len = 4;
            cp = c & 0x07;
        } else {
            throw FormatError("invalid UTF-8 lead byte");
        }
        if (i + len > s.size()) throw FormatError("truncated UTF-8 sequence");
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) throw FormatError("invalid UTF-8 continuation byte");
            cp = (cp << 6) | (cc & 0x3f);
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string utf8_encode(std::u32string_view text) {
    std::string out;
    for (const char32_t cp : text) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        } else {
            out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        }
    }
    return out;
}

std::string punycode_encode(std::u32string_view input) {
    std::string output;
    for (const char32_t cp : input) {
        if (cp < 0x80) output.push_back(static_cast<char>(cp));
    }
    const auto basic = static_cast<std::uint32_t>(output.size());
    std::uint32_t handled = basic;
    if (basic > 0) output.push_back('-');

    std::uint32_t n = kInitialN;
    std::uint32_t delta = 0;
    std::uint32_t bias = kInitialBias;
    while (handled < input.size()) {
        std::uint32_t m = UINT32_MAX;
        for (const char32_t cp : input) {
            if (cp >= n && cp < m) m = cp;
        }
        if ((m - n) > (UINT32_MAX - delta) / (handled + 1)) throw FormatError("punycode overflow");
        delta += (m - n) * (handled + 1);
        n = m;
        for (const char32_t cp : input) {
            if (cp < n && ++delta == 0) throw FormatError("punycode overflow");
            if (cp != n) continue;
            std::uint32_t q = delta;
            for (std::uint32_t k = kBase;; k += kBase) {
                const std::uint32_t t = threshold(k, bias);
                if (q < t) break;
                output.push_back(encode_digit(t + (q - t) % (kBase - t)));
                q = (q - t) / (kBase - t);
            }
            output.push_back(encode_digit(q));
            bias = adapt(delta, handled + 1, handled == basic);
            delta = 0;
            ++handled;
        }
        ++delta;
        ++n;
    }
    return output;
}

std::u32string punycode_decode(std::string_view input) {
    std::u32string output;
    const auto last_dash = input.rfind('-');
    std::size_t pos = 0;
    if (last_dash != std::string_view::npos) {
        for (std::size_t i = 0; i < last_dash; ++i) {
            const auto c = static_cast<unsigned char>(input[i]);
            if (c >= 0x80) throw FormatError("non-basic code point before punycode delimiter");
            output.push_back(c);
        }
        pos = last_dash + 1;
    }

    std::uint32_t n = kInitialN;
    std::uint32_t i = 0;
    std::uint32_t bias = kInitialBias;
    while (pos < input.size()) {
        const std::uint32_t old_i = i;
        std::uint32_t w = 1;
        for (std::uint32_t k = kBase;; k += kBase) {
            if (pos >= input.size()) throw FormatError("truncated punycode");
            const std::uint32_t digit = decode_digit(input[pos++]);
            if (digit > (UINT32_MAX - i) / w) throw FormatError("punycode overflow");
            i += digit * w;
            const std::uint32_t t = threshold(k, bias);
            if (digit < t) break;
            if (w > UINT32_MAX / (kBase - t)) throw FormatError("punycode overflow");
            w *= kBase - t;
        }
        const auto len = static_cast<std::uint32_t>(output.size() + 1);
        bias = adapt(i - old_i, len, old_i == 0);
        if (i / len > UINT32_MAX - n) throw FormatError("punycode overflow");
        n += i / len;
        i %= len;
        output.insert(output.begin() + i, static_cast<char32_t>(n));
        ++i;
    }
    return output;
}

std::string label_to_ascii(std::string_view utf8_label) {
    const auto cps = utf8_decode(utf8_label);
    bool ascii = true;
    for (const char32_t cp : cps) ascii = ascii && cp < 0x80;
    if (ascii) return std::string(utf8_label);
    return "xn--" + punycode_encode(cps);
}

std::string label_to_unicode(std::string_view ascii_label) {
    if (ascii_label.size() < 4) return std::string(ascii_label);
    const auto prefix = ascii_label.substr(0, 4);
    if (prefix != "xn--" && prefix != "XN--" && prefix != "Xn--" && prefix != "xN--") return std::string(ascii_label);
    return utf8_encode(punycode_decode(ascii_label.substr(4)));
}

}  // namespace phishrl::idn
