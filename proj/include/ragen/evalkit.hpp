#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ragen/evidence.hpp"
#include "ragen/qacgen.hpp"

namespace ragen {

struct RankedRetrieval {
  std::string query_id;
  std::vector<std::string> ranked_chunk_ids;
  std::set<std::string> gold_chunk_ids;
};

/// |gold ∩ top-k| / |gold|. Throws PreconditionError for k = 0 or empty gold.
double recall_at_k(const RankedRetrieval& item, std::size_t k);

/// Reciprocal rank of the first gold id within the top 10, else 0.
double mrr_at_10(const RankedRetrieval& item);

struct RetrievalReport {
  std::map<std::size_t, double> recall_at;
  double mrr_at_10 = 0.0;
  std::size_t n_queries = 0;
  std::size_t skipped = 0;  ///< queries whose gold chunks are not all in the index
};

/// Dataset-level means over `items`.
RetrievalReport aggregate_retrieval(const std::vector<RankedRetrieval>& items, const std::vector<std::size_t>& ks);

/// Embeds each question, ranks the whole index by cosine (ties by chunk id)
/// and scores against the record's evidence_chunk_ids.
RetrievalReport evaluate_retrieval(const std::vector<QacRecord>& records, const ChunkIndex& index, Embedder& embedder,
                                   const std::vector<std::size_t>& ks = {1, 5, 10});

nlohmann::ordered_json to_json(const RetrievalReport& r);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Token LCS over case-folded tokens of the corpus tokenizer.
RougeScore rouge_l_score(const std::string& candidate, const std::string& reference);
inline double rouge_l(const std::string& candidate, const std::string& reference) {
  return rouge_l_score(candidate, reference).f1;
}

struct RougeReport {
  double mean_f1 = 0.0;
  std::size_t n_pairs = 0;
  std::size_t missing_predictions = 0;
};

/// Mean ROUGE-L F1 of predicted answers (by record_id) against references.
RougeReport evaluate_answers(const std::vector<QacRecord>& records,
                             const std::map<std::string, std::string>& predictions);

nlohmann::ordered_json to_json(const RougeReport& r);

/// Seeded sample of n records without replacement, and the rest; both keep
/// input order. n > |records| returns everything as the sample, with a
/// warning.
std::pair<std::vector<QacRecord>, std::vector<QacRecord>> sample_eval_split(const std::vector<QacRecord>& records,
                                                                           std::size_t n, std::uint64_t seed);

}  // namespace ragen
