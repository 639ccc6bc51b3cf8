#include "coldrec/text.hpp"

#include <charconv>

namespace coldrec::text {

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(std::string_view s, std::string_view delim) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(delim, pos);
    if (next == std::string_view::npos) {
      out.emplace_back(s.substr(pos));
      return out;
    }
    out.emplace_back(s.substr(pos, next - pos));
    pos = next + delim.size();
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string sanitize_utf8(std::string_view s, std::size_t& replaced) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t min_cp = 0;
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      min_cp = 0x80;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      min_cp = 0x800;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      min_cp = 0x10000;
    }
    bool ok = len != 0 && i + len <= s.size();
    char32_t cp = 0;
    if (ok) {
      cp = c & (0xFF >> (len + 1));
      for (std::size_t j = 1; j < len; ++j) {
        auto cc = static_cast<unsigned char>(s[i + j]);
        if ((cc & 0xC0) != 0x80) {
          ok = false;
          break;
        }
        cp = (cp << 6) | (cc & 0x3F);
      }
      ok = ok && cp >= min_cp && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
    }
    if (ok) {
      out.append(s.substr(i, len));
      i += len;
    } else {
      append_utf8(out, 0xFFFD);
      ++replaced;
      ++i;
    }
  }
  return out;
}

namespace {

// Decodes the entity starting at s[pos] == '&'. On success appends the
// character(s) and returns the number of bytes consumed; 0 otherwise.
std::size_t decode_entity(std::string_view s, std::size_t pos, std::string& out) {
  std::size_t semi = s.find(';', pos);
  if (semi == std::string_view::npos || semi - pos > 10) return 0;
  std::string_view name = s.substr(pos + 1, semi - pos - 1);
  std::size_t consumed = semi - pos + 1;
  if (name == "amp") out.push_back('&');
  else if (name == "lt") out.push_back('<');
  else if (name == "gt") out.push_back('>');
  else if (name == "quot") out.push_back('"');
  else if (name == "apos") out.push_back('\'');
  else if (name == "nbsp") out.push_back(' ');
  else if (name.size() >= 2 && name[0] == '#') {
    unsigned long cp = 0;
    const char* first = name.data() + 1;
    const char* last = name.data() + name.size();
    int base = 10;
    if (*first == 'x' || *first == 'X') {
      ++first;
      base = 16;
    }
    auto [ptr, ec] = std::from_chars(first, last, cp, base);
    if (ec != std::errc{} || ptr != last || first == last || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return 0;
    }
    append_utf8(out, static_cast<char32_t>(cp));
  } else {
    return 0;
  }
  return consumed;
}

}  // namespace

std::string strip_html(std::string_view s) {
  std::string no_tags;
  no_tags.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '<') {
      std::size_t close = s.find('>', i + 1);
      if (close != std::string_view::npos) {
        no_tags.push_back(' ');
        i = close;
        continue;
      }
    }
    no_tags.push_back(s[i]);
  }
  std::string decoded;
  decoded.reserve(no_tags.size());
  for (std::size_t i = 0; i < no_tags.size(); ++i) {
    if (no_tags[i] == '&') {
      std::size_t used = decode_entity(no_tags, i, decoded);
      if (used) {
        i += used - 1;
        continue;
      }
    }
    decoded.push_back(no_tags[i]);
  }
  return collapse_whitespace(decoded);
}

}  // namespace coldrec::text
