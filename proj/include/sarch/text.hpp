#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sarch::text {

// Bytes >= 0x80 (UTF-8 multibyte sequences) count as word characters so that
// non-ASCII letters stay inside their token; only ASCII is case-folded.
inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Lowercased maximal runs of word characters.
std::vector<std::string> tokenize(std::string_view s);

/// Splits on ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace sarch::text
