#include "ragen/evalkit.hpp"

#include <algorithm>
#include <numeric>

#include "ragen/diagnostics.hpp"
#include "ragen/errors.hpp"
#include "ragen/linalg.hpp"
#include "ragen/rng.hpp"
#include "ragen/text.hpp"

namespace ragen {

double recall_at_k(const RankedRetrieval& item, std::size_t k) {
  if (k == 0) throw PreconditionError("recall_at_k: k must be >= 1");
  if (item.gold_chunk_ids.empty()) throw PreconditionError("recall_at_k: empty gold set for " + item.query_id);
  std::size_t hits = 0;
  const std::size_t top = std::min(k, item.ranked_chunk_ids.size());
  for (std::size_t i = 0; i < top; ++i) hits += item.gold_chunk_ids.count(item.ranked_chunk_ids[i]);
  return static_cast<double>(hits) / static_cast<double>(item.gold_chunk_ids.size());
}

double mrr_at_10(const RankedRetrieval& item) {
  const std::size_t top = std::min<std::size_t>(10, item.ranked_chunk_ids.size());
  for (std::size_t i = 0; i < top; ++i) {
    if (item.gold_chunk_ids.count(item.ranked_chunk_ids[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

RetrievalReport aggregate_retrieval(const std::vector<RankedRetrieval>& items, const std::vector<std::size_t>& ks) {
  RetrievalReport report;
  for (auto k : ks) report.recall_at[k] = 0.0;
  for (const auto& item : items) {
    for (auto k : ks) report.recall_at[k] += recall_at_k(item, k);
    report.mrr_at_10 += mrr_at_10(item);
  }
  report.n_queries = items.size();
  if (!items.empty()) {
    const double n = static_cast<double>(items.size());
    for (auto& [k, v] : report.recall_at) v /= n;
    report.mrr_at_10 /= n;
  }
  return report;
}

RetrievalReport evaluate_retrieval(const std::vector<QacRecord>& records, const ChunkIndex& index, Embedder& embedder,
                                   const std::vector<std::size_t>& ks) {
  std::vector<RankedRetrieval> items;
  std::vector<const QacRecord*> usable;
  std::size_t skipped = 0;
  for (const auto& r : records) {
    const bool covered = !r.evidence_chunk_ids.empty() &&
                         std::all_of(r.evidence_chunk_ids.begin(), r.evidence_chunk_ids.end(),
                                     [&](const std::string& id) { return index.find(id).has_value(); });
    if (!covered) {
      warn("eval", "record " + r.record_id + " skipped: gold chunk missing from the index");
      ++skipped;
      continue;
    }
    usable.push_back(&r);
  }
  if (!usable.empty()) {
    std::vector<std::string> questions;
    for (const auto* r : usable) questions.push_back(r->question);
    const auto vectors = embedder.embed(questions);
    const std::size_t depth = std::max<std::size_t>(10, ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end()));
    for (std::size_t q = 0; q < usable.size(); ++q) {
      RankedRetrieval item;
      item.query_id = usable[q]->record_id;
      item.gold_chunk_ids.insert(usable[q]->evidence_chunk_ids.begin(), usable[q]->evidence_chunk_ids.end());
      for (const auto& row : dense_top_m(index, vectors[q], std::min(depth, index.size()))) {
        item.ranked_chunk_ids.push_back(index.chunk_ids[row.row]);
      }
      items.push_back(std::move(item));
    }
  }
  auto report = aggregate_retrieval(items, ks);
  report.skipped = skipped;
  return report;
}

nlohmann::ordered_json to_json(const RetrievalReport& r) {
  nlohmann::ordered_json recall = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.recall_at) recall[std::to_string(k)] = v;
  return {{"recall_at", recall},
          {"mrr_at_10", r.mrr_at_10},
          {"n_queries", r.n_queries},
          {"skipped", r.skipped},
          {"gold", "set of evidence_chunk_ids per record"}};
}

RougeScore rouge_l_score(const std::string& candidate, const std::string& reference) {
  const auto c = token_strings(candidate, true);
  const auto r = token_strings(reference, true);
  if (c.empty() || r.empty()) return {};
  std::vector<std::size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
  for (std::size_t i = 1; i <= c.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j) {
      cur[j] = c[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[r.size()]);
  RougeScore s;
  s.precision = lcs / static_cast<double>(c.size());
  s.recall = lcs / static_cast<double>(r.size());
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

RougeReport evaluate_answers(const std::vector<QacRecord>& records,
                             const std::map<std::string, std::string>& predictions) {
  RougeReport report;
  for (const auto& r : records) {
    const auto it = predictions.find(r.record_id);
    if (it == predictions.end()) {
      ++report.missing_predictions;
      continue;
    }
    report.mean_f1 += rouge_l(it->second, r.answer);
    ++report.n_pairs;
  }
  if (report.n_pairs) report.mean_f1 /= static_cast<double>(report.n_pairs);
  return report;
}

nlohmann::ordered_json to_json(const RougeReport& r) {
  return {{"rouge_l_f1", r.mean_f1},
          {"n_pairs", r.n_pairs},
          {"missing_predictions", r.missing_predictions},
          {"variant", "whole-answer token LCS, case-folded"}};
}

std::pair<std::vector<QacRecord>, std::vector<QacRecord>> sample_eval_split(const std::vector<QacRecord>& records,
                                                                           std::size_t n, std::uint64_t seed) {
  if (n > records.size()) {
    warn("eval", "requested " + std::to_string(n) + " eval samples but only " + std::to_string(records.size()) +
                     " records exist; using all of them");
    return {records, {}};
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "eval-split"));
  rng.shuffle(order.begin(), order.end());
  std::vector<bool> picked(records.size(), false);
  for (std::size_t i = 0; i < n; ++i) picked[order[i]] = true;
  std::pair<std::vector<QacRecord>, std::vector<QacRecord>> out;
  for (std::size_t i = 0; i < records.size(); ++i) (picked[i] ? out.first : out.second).push_back(records[i]);
  return out;
}

}  // namespace ragen
