#pragma once

// Tokenization shared by the snippet filter, the linker and the answer
// features. Word distances and mention offsets are counted in whitespace
// tokens; matching compares tokens with their edge punctuation trimmed
// and ASCII letters folded to lowercase.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace webqa::text {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline char fold(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline std::string fold_case(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = fold(c);
  return out;
}

namespace detail {

// Decodes one UTF-8 sequence at s[i]; sets len to the bytes consumed.
// Invalid bytes decode as themselves with len 1.
inline std::uint32_t decode(std::string_view s, std::size_t i, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  int extra = 0;
  std::uint32_t cp = b0;
  if (b0 >= 0xF0 && b0 < 0xF8) {
    extra = 3;
    cp = b0 & 0x07;
  } else if (b0 >= 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if (b0 >= 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  }
  if (extra == 0 || i + extra >= s.size()) {
    len = 1;
    return b0;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      len = 1;
      return b0;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  len = static_cast<std::size_t>(extra) + 1;
  return cp;
}

inline bool is_word_codepoint(std::uint32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  // Latin-1 punctuation and symbols, general punctuation, supplemental
  // punctuation, CJK punctuation, fullwidth ASCII punctuation.
  if ((cp >= 0x80 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;
  if (cp >= 0x2E00 && cp <= 0x2E7F) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  return true;
}

}  // namespace detail

inline std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

// Maximal runs of word characters, case-folded. "Spouse(s)," -> {"spouse", "s"}.
inline std::vector<std::string> word_runs(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = 1;
    const std::uint32_t cp = detail::decode(s, i, len);
    if (detail::is_word_codepoint(cp)) {
      for (std::size_t k = 0; k < len; ++k) current.push_back(fold(s[i + k]));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
    i += len;
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

// Token with leading and trailing non-word characters removed, case-folded.
// "City," -> "city"; "A.M." -> "a.m"; "..." -> "".
inline std::string normalize_token(std::string_view token) {
  std::size_t begin = 0;
  std::size_t end = token.size();
  while (begin < end) {
    std::size_t len = 1;
    if (detail::is_word_codepoint(detail::decode(token, begin, len))) break;
    begin += len;
  }
  while (end > begin) {
    // Step back to the start of the last code point.
    std::size_t start = end - 1;
    while (start > begin && (static_cast<unsigned char>(token[start]) & 0xC0) == 0x80) --start;
    std::size_t len = 1;
    if (detail::is_word_codepoint(detail::decode(token, start, len)) && start + len == end) break;
    end = start;
  }
  return fold_case(token.substr(begin, end - begin));
}

inline std::vector<std::string> normalized_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (std::string_view tok : split_whitespace(s)) out.push_back(normalize_token(tok));
  return out;
}

// Trims and collapses internal whitespace runs to one space.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  for (std::string_view tok : split_whitespace(s)) {
    if (!out.empty()) out.push_back(' ');
    out.append(tok);
  }
  return out;
}

}  // namespace webqa::text
