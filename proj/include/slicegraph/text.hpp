#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace slicegraph {

inline bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

// Number of UTF-8 code points.
inline std::size_t char_count(std::string_view s) {
  std::size_t n = 0;
  for (char c : s) n += (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  return n;
}

// Deterministic, model-agnostic token estimate: ceil(chars / 4).
inline std::size_t estimate_tokens(std::string_view s) { return (char_count(s) + 3) / 4; }

// Identifier-aware terms: lowercase, split on non-alphanumerics (which
// includes underscores) and on lower->upper camel-case boundaries.
inline std::vector<std::string> tokenize_terms(std::string_view text) {
  std::vector<std::string> terms;
  std::string cur;
  char prev = 0;
  auto flush = [&] {
    if (!cur.empty()) terms.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (!std::isalnum(c)) {
      flush();
      prev = 0;
      continue;
    }
    if (std::isupper(c) && prev != 0 && std::islower(static_cast<unsigned char>(prev))) flush();
    cur += static_cast<char>(std::tolower(c));
    prev = ch;
  }
  flush();
  return terms;
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

}  // namespace slicegraph
