#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cosum {

struct Token {
  std::string text;    // normalized form
  std::size_t begin;   // byte offsets of the source span
  std::size_t end;
};

// Lowercased runs of Unicode letters, digits and combining marks.
// Apostrophes vanish and hyphens or slashes between two word characters
// vanish too ("State-run" -> "staterun", "China's" -> "chinas"); every other
// non-word character separates tokens. Invalid UTF-8 bytes separate tokens.
std::vector<std::string> tokenize(std::string_view text);
std::vector<Token> tokenize_with_offsets(std::string_view text);

// Tokens joined by single spaces; the canonical spelling of a phrase.
std::string normalize_phrase(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t first,
                        std::size_t count);

// Upper-cases a UTF-8 string code point by code point.
std::string to_upper(std::string_view text);

}  // namespace cosum
