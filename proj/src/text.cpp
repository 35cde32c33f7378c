#include "laydef/text.hpp"

#include "laydef/error.hpp"

namespace laydef {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<TokenSpan> tokenize_spans(std::string_view text) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    TokenSpan span;
    span.begin = i;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
      span.token.push_back(ascii_lower(text[i]));
      ++i;
    }
    span.end = i;
    out.push_back(std::move(span));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& span : tokenize_spans(text)) out.push_back(std::move(span.token));
  return out;
}

std::string_view trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return text.substr(b, e - b);
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : trim(text)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

int count_syllables(std::string_view word) {
  std::string w;
  w.reserve(word.size());
  for (char c : word) w.push_back(ascii_lower(c));

  int groups = 0;
  bool in_group = false;
  for (char c : w) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }

  const std::size_t n = w.size();
  if (n >= 1 && w[n - 1] == 'e') {
    const bool consonant_le = n >= 3 && w[n - 2] == 'l' && !is_vowel(w[n - 3]);
    if (!consonant_le) --groups;
  }
  return groups < 1 ? 1 : groups;
}

int count_sentences(std::string_view text) {
  int sentences = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '.' || text[i] == '!' || text[i] == '?') {
      if (!tokenize_spans(text.substr(start, i - start)).empty()) ++sentences;
      start = i + 1;
    }
  }
  return sentences < 1 ? 1 : sentences;
}

double fkgl(std::string_view text) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw UndefinedInputError("fkgl: text has no tokens");
  long syllables = 0;
  for (const auto& t : tokens) syllables += count_syllables(t);
  const double words = static_cast<double>(tokens.size());
  const double sentences = static_cast<double>(count_sentences(text));
  return 0.39 * (words / sentences) + 11.8 * (static_cast<double>(syllables) / words) - 15.59;
}

}  // namespace laydef
