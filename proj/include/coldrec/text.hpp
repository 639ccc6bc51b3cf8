#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace coldrec::text {

// ASCII alphanumerics plus every byte >= 0x80, so UTF-8 encoded letters
// stay inside words.
inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, std::string_view delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Collapses whitespace runs to one space and trims both ends.
std::string collapse_whitespace(std::string_view s);

// Replaces invalid UTF-8 sequences with U+FFFD. `replaced` is incremented
// once per invalid byte sequence.
std::string sanitize_utf8(std::string_view s, std::size_t& replaced);

// Tag and entity cleanup applied to review text and product fields:
//   1. every maximal `<...>` run becomes one space;
//   2. &amp; &lt; &gt; &quot; &apos; &nbsp; &#NN; &#xHH; become characters;
//   3. whitespace runs collapse to one space, ends trimmed.
// `great <b>value</b>!` -> `great value !`.
std::string strip_html(std::string_view s);

// Appends the UTF-8 encoding of a code point.
void append_utf8(std::string& out, char32_t cp);

}  // namespace coldrec::text
