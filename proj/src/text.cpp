#include "clignet/text.hpp"

#include <cctype>

namespace clignet {
namespace {

bool ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Length in bytes of a multi-byte UTF-8 whitespace sequence starting at i, or 0.
std::size_t unicode_space_len(std::string_view s, std::size_t i) {
  const auto at = [&](std::size_t k) { return static_cast<unsigned char>(s[i + k]); };
  const std::size_t left = s.size() - i;
  if (left >= 2 && at(0) == 0xC2 && (at(1) == 0x85 || at(1) == 0xA0)) return 2;
  if (left >= 3 && at(0) == 0xE1 && at(1) == 0x9A && at(2) == 0x80) return 3;  // U+1680
  if (left >= 3 && at(0) == 0xE2 && at(1) == 0x80) {
    const unsigned char c = at(2);
    if ((c >= 0x80 && c <= 0x8A) || c == 0xA8 || c == 0xA9 || c == 0xAF) return 3;
  }
  if (left >= 3 && at(0) == 0xE2 && at(1) == 0x81 && at(2) == 0x9F) return 3;  // U+205F
  if (left >= 3 && at(0) == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;  // U+3000
  return 0;
}

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  while (i < text.size()) {
    std::size_t skip = ascii_space(static_cast<unsigned char>(text[i])) ? 1 : unicode_space_len(text, i);
    if (skip) {
      if (start != std::string_view::npos) fn(text.substr(start, i - start));
      start = std::string_view::npos;
      i += skip;
    } else {
      if (start == std::string_view::npos) start = i;
      ++i;
    }
  }
  if (start != std::string_view::npos) fn(text.substr(start));
}

bool ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for_each_word(text, [&](std::string_view word) {
    std::size_t b = 0;
    std::size_t e = word.size();
    while (b < e && ascii_punct(word[b])) ++b;
    while (e > b && ascii_punct(word[e - 1])) --e;
    if (b == e) return;
    std::string token(word.substr(b, e - b));
    for (char& c : token) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    tokens.push_back(std::move(token));
  });
  return tokens;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  for_each_word(text, [&](std::string_view) { ++n; });
  return n;
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && ascii_space(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && ascii_space(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

}  // namespace clignet
