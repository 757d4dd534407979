#include "ragen/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <unordered_set>
#include <stdexcept>

namespace ragen {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && ((u >= 0x21 && u <= 0x2f) || (u >= 0x3a && u <= 0x40) ||
                      (u >= 0x5b && u <= 0x60) || (u >= 0x7b && u <= 0x7e));
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i == n) break;
    std::size_t end = i;
    while (end < n && !is_space(text[end])) ++end;

    std::size_t core_begin = i;
    while (core_begin < end && is_punct(text[core_begin])) ++core_begin;
    std::size_t core_end = end;
    while (core_end > core_begin && is_punct(text[core_end - 1])) --core_end;

    for (std::size_t p = i; p < core_begin; ++p) tokens.push_back({p, p + 1});
    if (core_begin < core_end) tokens.push_back({core_begin, core_end});
    for (std::size_t p = std::max(core_end, core_begin); p < end; ++p) tokens.push_back({p, p + 1});
    i = end;
  }
  return tokens;
}

std::size_t count_tokens(std::string_view text) { return tokenize(text).size(); }

std::vector<std::string> token_strings(std::string_view text, bool fold) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(text)) {
    auto s = std::string(text.substr(t.begin, t.end - t.begin));
    out.push_back(fold ? fold_case(s) : std::move(s));
  }
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string lf;
  lf.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      lf.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      lf.push_back(text[i]);
    }
  }

  std::string stripped;
  stripped.reserve(lf.size());
  std::size_t line_start = 0;
  while (line_start <= lf.size()) {
    std::size_t nl = lf.find('\n', line_start);
    const bool last = nl == std::string::npos;
    if (last) nl = lf.size();
    std::size_t line_end = nl;
    while (line_end > line_start && is_space(lf[line_end - 1])) --line_end;
    stripped.append(lf, line_start, line_end - line_start);
    if (last) break;
    stripped.push_back('\n');
    line_start = nl + 1;
  }

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  const auto source = icu::UnicodeString::fromUTF8(stripped);
  if (nfc->isNormalized(source, status) && U_SUCCESS(status)) return stripped;
  status = U_ZERO_ERROR;
  const icu::UnicodeString normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string fold_case(std::string_view text) {
  const bool ascii = std::all_of(text.begin(), text.end(),
                                 [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  if (ascii) {
    std::string out(text);
    for (auto& c : out) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
  }
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  u.foldCase();
  std::string out;
  u.toUTF8String(out);
  return out;
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

std::string normalize_phrase(std::string_view text) {
  const std::string folded = fold_case(trim(text));
  std::string out;
  bool pending_space = false;
  for (char c : folded) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

bool is_word(std::string_view token) {
  if (token.empty()) return false;
  const auto c = static_cast<unsigned char>(token.front());
  return c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_stopword(std::string_view w) {
  static const std::unordered_set<std::string_view> kStop = {
      "a",       "about",  "above",   "after",  "again",   "against", "all",     "also",
      "am",      "an",     "and",     "any",    "are",     "as",      "at",      "be",
      "because", "been",   "before",  "being",  "below",   "between", "both",    "but",
      "by",      "can",    "could",   "did",    "do",      "does",    "doing",   "down",
      "during",  "each",   "few",     "for",    "from",    "further", "had",     "has",
      "have",    "having", "he",      "her",    "here",    "hers",    "him",     "his",
      "how",     "i",      "if",      "in",     "into",    "is",      "it",      "its",
      "itself",  "just",   "may",     "me",     "might",   "more",    "most",    "much",
      "must",    "my",     "no",      "nor",    "not",     "now",     "of",      "off",
      "on",      "once",   "only",    "or",     "other",   "our",     "ours",    "out",
      "over",    "own",    "same",    "she",    "should",  "so",      "some",    "such",
      "than",    "that",   "the",     "their",  "them",    "then",    "there",   "these",
      "they",    "this",   "those",   "through", "to",     "too",     "under",   "until",
      "up",      "very",   "was",     "we",     "were",    "what",    "when",    "where",
      "which",   "while",  "who",     "why",    "will",    "with",    "would",   "you"};
  return kStop.count(w) > 0;
}

std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : token_strings(text, true)) {
    if (is_word(t) && !is_stopword(t)) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace ragen
