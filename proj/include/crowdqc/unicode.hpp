#pragma once

#include <string>
#include <string_view>

namespace crowdqc::unicode {

/// Decodes UTF-8 into scalar values. Throws crowdqc::Error on malformed input.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view scalars);
std::string encode(char32_t c);

/// Number of scalar values in a UTF-8 string.
std::size_t length(std::string_view utf8);

/// Canonical composition (NFC).
std::string nfc(std::string_view utf8);

bool is_whitespace(char32_t c);
/// Any general category P* (Pc, Pd, Ps, Pe, Pi, Pf, Po).
bool is_punctuation(char32_t c);
char32_t to_lower(char32_t c);

}  // namespace crowdqc::unicode
