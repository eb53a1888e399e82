#pragma once

#include <string>
#include <string_view>

namespace phishrl::idn {

std::u32string utf8_decode(std::string_view utf8);
std::string utf8_encode(std::u32string_view text);

// Bootstring encoding with the punycode parameters (RFC 3492).
std::string punycode_encode(std::u32string_view input);
std::u32string punycode_decode(std::string_view input);

// "xn--" + punycode for labels with non-ASCII code points; ASCII labels unchanged.
std::string label_to_ascii(std::string_view utf8_label);
// Inverse of label_to_ascii; labels without the ACE prefix are returned as-is.
std::string label_to_unicode(std::string_view ascii_label);

}  // namespace phishrl::idn
