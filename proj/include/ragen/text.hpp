#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ragen {

/// Byte offsets of one token, half-open.
struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

/// The pipeline's tokenization rule: split on ASCII whitespace, then peel
/// leading and trailing ASCII punctuation off each piece, one token per
/// punctuation character. Inner punctuation ("e.g", "don't") stays attached.
/// Bytes >= 0x80 count as word characters.
std::vector<Token> tokenize(std::string_view text);

std::size_t count_tokens(std::string_view text);

/// Token strings, optionally case-folded.
std::vector<std::string> token_strings(std::string_view text, bool fold = false);

/// LF line endings, trailing whitespace stripped per line, Unicode NFC.
std::string normalize_text(std::string_view text);

/// Unicode default case folding.
std::string fold_case(std::string_view text);

std::string trim(std::string_view text);

/// Trims, case-folds and collapses internal whitespace runs to one space.
std::string normalize_phrase(std::string_view text);

bool is_space(char c);
bool is_punct(char c);

/// True for tokens that start with a letter, digit or non-ASCII byte.
bool is_word(std::string_view token);

bool is_stopword(std::string_view folded_token);

/// Case-folded word tokens with stopwords removed, in text order.
std::vector<std::string> content_words(std::string_view text);

}  // namespace ragen
