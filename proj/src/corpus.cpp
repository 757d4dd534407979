#include "ragen/corpus.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "ragen/digest.hpp"
#include "ragen/errors.hpp"
#include "ragen/text.hpp"

namespace fs = std::filesystem;

namespace ragen {
namespace {

bool matches_any(const std::string& rel, const std::vector<std::string>& globs) {
  return std::any_of(globs.begin(), globs.end(),
                     [&](const std::string& g) { return ::fnmatch(g.c_str(), rel.c_str(), 0) == 0; });
}

bool is_abbreviation(std::string_view word) {
  static constexpr std::array<std::string_view, 15> kAbbrev = {
      "e.g.", "i.e.", "dr.", "fig.", "figs.", "mr.",  "mrs.", "ms.",
      "prof.", "vs.", "cf.", "al.",  "no.",   "st.",  "eq."};
  const std::string folded = fold_case(word);
  return std::find(kAbbrev.begin(), kAbbrev.end(), folded) != kAbbrev.end();
}

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

}  // namespace

Document make_document(std::string doc_id, std::string_view raw_text) {
  Document doc;
  doc.source_path = doc_id;
  doc.doc_id = std::move(doc_id);
  doc.text = normalize_text(raw_text);
  doc.content_hash = sha256_hex(doc.text);
  return doc;
}

IngestResult ingest_documents(const fs::path& root, const std::vector<std::string>& include_globs) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw PreconditionError("corpus root is not a readable directory: " + root.string());
  }

  std::vector<std::string> matched;
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (!it->is_regular_file(ec)) continue;
    const std::string rel = fs::relative(it->path(), root, ec).generic_string();
    if (matches_any(rel, include_globs)) matched.push_back(rel);
  }
  if (matched.empty()) {
    throw PreconditionError("no files under " + root.string() + " match the include globs");
  }
  std::sort(matched.begin(), matched.end());

  IngestResult result;
  for (const auto& rel : matched) {
    std::ifstream in(root / rel, std::ios::binary);
    if (!in) {
      result.errors.push_back({rel, "cannot open file"});
      continue;
    }
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
      result.errors.push_back({rel, "read error"});
      continue;
    }
    result.documents.push_back(make_document(rel, raw));
  }
  return result;
}

std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal) {
  char suffix[16];
  std::snprintf(suffix, sizeof suffix, "#c%05zu", ordinal);
  return std::string(doc_id) + suffix;
}

std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_size, std::size_t overlap) {
  if (chunk_size < 1 || overlap >= chunk_size) {
    throw PreconditionError("chunking requires 0 <= overlap < chunk_size and chunk_size >= 1");
  }
  const auto tokens = tokenize(doc.text);
  const std::size_t total = tokens.size();
  const std::size_t stride = chunk_size - overlap;

  std::vector<Chunk> chunks;
  for (std::size_t start = 0; start < total; start += stride) {
    const std::size_t end = std::min(start + chunk_size, total);
    Chunk c;
    c.ordinal = chunks.size();
    c.doc_id = doc.doc_id;
    c.chunk_id = make_chunk_id(doc.doc_id, c.ordinal);
    c.token_span = {start, end};
    const std::size_t b = tokens[start].begin;
    c.text = doc.text.substr(b, tokens[end - 1].end - b);
    chunks.push_back(std::move(c));
    if (end == total) break;
  }
  return chunks;
}

std::vector<Sentence> split_sentences(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  const std::size_t n = text.size();
  std::size_t start = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;

    std::size_t j = i;
    while (j < n && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
    std::size_t close = j;
    while (close < n && is_closer(text[close])) ++close;

    bool boundary = false;
    if (close == n) {
      boundary = true;
    } else if (is_space(text[close])) {
      std::size_t k = close;
      while (k < n && is_space(text[k])) ++k;
      while (k < n && is_opener(text[k])) ++k;
      boundary = k < n && is_upper(text[k]);
    }

    if (boundary && c == '.' && j == i + 1) {
      std::size_t w = i;
      while (w > start && !is_space(text[w - 1])) --w;
      while (w < i && is_opener(text[w])) ++w;
      if (is_abbreviation(text.substr(w, i + 1 - w))) boundary = false;
    }

    if (boundary) {
      spans.emplace_back(start, close);
      start = close;
    }
    i = j - 1;
  }
  if (start < n) spans.emplace_back(start, n);

  std::vector<Sentence> out;
  for (auto [b, e] : spans) {
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    if (b == e) continue;
    Sentence s;
    s.index = out.size();
    s.begin = b;
    s.end = e;
    s.text = std::string(text.substr(b, e - b));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ragen
