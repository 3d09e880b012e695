#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace driftlab {

// Unicode NFC of a UTF-8 string. Invalid sequences become U+FFFD.
std::string nfc_normalize(std::string_view utf8);

// Compatibility decomposition, combining marks dropped, then every remaining
// non-ASCII code point dropped.
std::string ascii_fold(std::string_view utf8);

// Splits on runs of ASCII whitespace; never yields empty tokens.
std::vector<std::string> split_whitespace(std::string_view text);

std::size_t count_whitespace_tokens(std::string_view text);

}  // namespace driftlab
