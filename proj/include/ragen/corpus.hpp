#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ragen {

struct Document {
  std::string doc_id;       ///< corpus-relative path, '/' separated
  std::string source_path;  ///< same as doc_id; kept separate for callers that rebase
  std::string text;         ///< normalized text
  std::string content_hash; ///< sha256 of `text`
};

/// Half-open range of token indices.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool operator==(const TokenSpan&) const = default;
};

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::size_t ordinal = 0;
  std::string text;
  TokenSpan token_span;
};

/// One sentence of a chunk; `begin`/`end` are byte offsets into the chunk text.
struct Sentence {
  std::string text;
  std::size_t index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct IngestError {
  std::string path;
  std::string message;
};

struct IngestResult {
  std::vector<Document> documents;
  std::vector<IngestError> errors;
};

/// Reads every regular file under `root` whose corpus-relative path matches
/// one of `include_globs`. Documents are ordered by path. Unreadable files
/// are reported in `errors`; zero matches throws.
IngestResult ingest_documents(const std::filesystem::path& root,
                              const std::vector<std::string>& include_globs);

/// Builds a Document from in-memory text (normalizes and hashes).
Document make_document(std::string doc_id, std::string_view raw_text);

std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal);

/// Sliding token window with stride chunk_size - overlap. Throws
/// PreconditionError unless 0 <= overlap < chunk_size.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_size, std::size_t overlap);

/// Rule-based segmentation: a run of . ! ? ends a sentence when followed by
/// whitespace and an uppercase letter (optionally behind an opening quote or
/// bracket), unless the word it closes is a known abbreviation.
std::vector<Sentence> split_sentences(std::string_view text);

inline std::vector<Sentence> split_sentences(const Chunk& chunk) { return split_sentences(chunk.text); }

}  // namespace ragen
