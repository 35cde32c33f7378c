#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace laydef {

// A token plus the byte range it came from in the source text.
struct TokenSpan {
  std::string token;  // lowercased
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Lowercases and splits on anything that is not a letter or digit.
/// Bytes >= 0x80 count as letters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);
std::vector<TokenSpan> tokenize_spans(std::string_view text);

std::string_view trim(std::string_view text);

/// Trim plus collapse of internal whitespace runs to a single space. Case is kept.
std::string normalize_whitespace(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Vowel-group heuristic: groups of {a,e,i,o,u,y}, minus one for a silent
/// trailing "e" (consonant + "le" endings keep it), never below 1.
int count_syllables(std::string_view word);

/// Number of sentences: segments between '.', '!' and '?' that hold at least
/// one token. Never less than 1.
int count_sentences(std::string_view text);

/// Flesch-Kincaid grade level. Throws UndefinedInputError for token-free text.
double fkgl(std::string_view text);

}  // namespace laydef
