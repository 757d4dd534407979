#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ragen/concepts.hpp"
#include "ragen/corpus.hpp"
#include "ragen/providers.hpp"

namespace ragen {

/// Exact dense index: row i of `vectors` is the unit-normalized embedding of
/// chunk `chunk_ids[i]`.
struct ChunkIndex {
  std::vector<std::string> chunk_ids;
  Eigen::MatrixXd vectors;

  std::size_t size() const { return chunk_ids.size(); }
  Eigen::Index dim() const { return vectors.cols(); }
  std::optional<std::size_t> find(const std::string& chunk_id) const;
};

/// Embeds every chunk once, in one batch. Throws PreconditionError when
/// `chunks` is empty.
ChunkIndex build_chunk_index(const std::vector<Chunk>& chunks, Embedder& embedder);

struct ScoredRow {
  std::size_t row = 0;
  double score = 0.0;
};

/// Brute-force cosine top-m, ties broken by ascending chunk_id.
std::vector<ScoredRow> dense_top_m(const ChunkIndex& index, const Embedding& query, std::size_t m);

struct RetrievedChunk {
  std::string chunk_id;
  std::size_t row = 0;       ///< row in the index (and position in its chunk list)
  double score = 0.0;        ///< reranker score
  double dense_score = 0.0;  ///< cosine from the first stage
};

struct EvidenceParams {
  std::size_t m = 20;  ///< dense candidates
  std::size_t n = 5;   ///< kept after rerank
  std::size_t window_radius = 1;
  double min_window_score = 0.25;
};

/// Dense top-M against the concept label, reranked against the label; the
/// top N in reranked order. `chunks` must be parallel to the index rows.
std::vector<RetrievedChunk> retrieve_chunks(const DocumentConcept& concept_info, const ChunkIndex& index,
                                            const std::vector<Chunk>& chunks, std::size_t m, std::size_t n,
                                            Embedder& embedder, Reranker& reranker,
                                            const Embedding* label_embedding = nullptr);

struct Evidence {
  std::string evidence_id;  ///< concept_id + "@" + chunk_id
  std::string concept_id;
  std::string chunk_id;
  std::size_t chunk_ordinal = 0;
  std::vector<std::size_t> sentence_indices;  ///< ascending, contiguous
  std::string text;                            ///< verbatim span of the chunk
  double retrieval_score = 0.0;
  double window_score = 0.0;
};

/// Scores every sentence against the concept label, expands the best one by
/// `window_radius` sentences and merges the runner-up window when the two
/// overlap. Returns nullopt when the best score is below `min_window_score`.
std::optional<Evidence> extract_evidence(const DocumentConcept& concept_info, const Chunk& chunk,
                                         std::size_t window_radius, double min_window_score, Embedder& embedder,
                                         const Embedding* label_embedding = nullptr);

struct QuestionStem {
  std::string stem_id;  ///< equals the concept_id
  DocumentConcept document_concept;
  std::vector<Evidence> evidences;  ///< in reranked order, distinct chunks
  std::string doc_id;
};

/// retrieve_chunks + extract_evidence per concept. Concepts without any
/// surviving evidence produce no stem. Output ordered by stem_id.
std::vector<QuestionStem> assemble_stems(const Document& doc, const std::vector<DocumentConcept>& concepts,
                                         const ChunkIndex& index, const std::vector<Chunk>& chunks,
                                         const EvidenceParams& params, Embedder& embedder, Reranker& reranker);

}  // namespace ragen
