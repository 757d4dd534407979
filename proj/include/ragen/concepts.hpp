#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ragen/corpus.hpp"
#include "ragen/kmeans.hpp"
#include "ragen/prompts.hpp"
#include "ragen/providers.hpp"

namespace ragen {

struct ChunkConcept {
  std::string text;
  std::string chunk_id;
  std::string doc_id;
  std::string normalized;  ///< normalize_phrase(text)

  bool operator==(const ChunkConcept&) const = default;
};

ChunkConcept make_chunk_concept(std::string text, std::string chunk_id, std::string doc_id);

struct DocumentConcept {
  std::string concept_id;
  std::string label;
  std::vector<ChunkConcept> members;
  Embedding centroid;
  std::string doc_id;
  bool summarized = false;  ///< label came from a generator summary, not a member
};

using ConceptClustering = ClusteringResult<double>;

enum class RepresentativeMode { centroid, llm_summary };

struct ExtractionParams {
  std::size_t max_concepts_per_chunk = 8;
  int json_retry = 3;  ///< total attempts when the reply is not valid JSON
  double temperature = 0.2;
  int max_output_tokens = 512;
};

/// Asks the generator for the chunk's concepts and parses the JSON list.
/// Concepts are trimmed, deduplicated by normalized form and capped.
/// Throws ParseError when no attempt yields a parseable list.
std::vector<ChunkConcept> extract_chunk_concepts(const Chunk& chunk, Generator& generator,
                                                 const PromptTemplates& templates, const ExtractionParams& params);

/// Parses a concept-list reply: a JSON array of strings, or an object with a
/// "concepts" array; surrounding Markdown code fences are tolerated.
std::optional<std::vector<std::string>> parse_concept_list(const std::string& reply);

struct DedupResult {
  std::vector<ChunkConcept> concepts;
  std::vector<Embedding> embeddings;  ///< parallel to `concepts`
};

/// Exact normalized duplicates merge first; then, in first-occurrence order,
/// any concept whose cosine to an already kept one reaches `threshold` drops.
DedupResult dedup_concepts_embedded(const std::vector<ChunkConcept>& concepts, Embedder& embedder, double threshold);

std::vector<ChunkConcept> dedup_concepts(const std::vector<ChunkConcept>& concepts, Embedder& embedder,
                                         double threshold);

/// Builds one DocumentConcept per cluster. Centroid mode picks the member
/// closest to the centroid (ties: smallest normalized text). Summary mode
/// asks the generator for a label of at most 8 words and falls back to
/// centroid mode for that cluster when the reply is unusable.
std::vector<DocumentConcept> select_representatives(const ConceptClustering& clustering,
                                                    const std::vector<ChunkConcept>& concepts,
                                                    const std::vector<Embedding>& embeddings,
                                                    const std::string& doc_id, RepresentativeMode mode,
                                                    Generator* generator = nullptr,
                                                    const PromptTemplates* templates = nullptr);

/// clamp(round(sqrt(n)), 3, 12), never more than n.
std::size_t default_concept_count(std::size_t unique_concepts);

struct FusionParams {
  std::optional<std::size_t> k;  ///< nullopt: default_concept_count
  double dedup_threshold = 0.92;
  std::uint64_t seed = 0;
  std::size_t max_iters = 50;
  RepresentativeMode mode = RepresentativeMode::centroid;
};

struct FusionResult {
  std::vector<ChunkConcept> unique_concepts;
  ConceptClustering clustering;
  std::vector<DocumentConcept> concepts;  ///< ordered by concept_id
};

/// dedup -> embed -> kmeans(min(K, #unique)) -> representatives.
/// Throws PreconditionError when `chunk_concepts` is empty.
FusionResult fuse_concepts(const Document& doc, const std::vector<ChunkConcept>& chunk_concepts, Embedder& embedder,
                           const FusionParams& params, Generator* generator = nullptr,
                           const PromptTemplates* templates = nullptr);

std::string make_concept_id(const std::string& doc_id, std::size_t cluster);

}  // namespace ragen
