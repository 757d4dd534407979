#include "ragen/evidence.hpp"

#include <algorithm>

#include "ragen/diagnostics.hpp"
#include "ragen/errors.hpp"
#include "ragen/linalg.hpp"

namespace ragen {

std::optional<std::size_t> ChunkIndex::find(const std::string& chunk_id) const {
  const auto it = std::find(chunk_ids.begin(), chunk_ids.end(), chunk_id);
  if (it == chunk_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - chunk_ids.begin());
}

ChunkIndex build_chunk_index(const std::vector<Chunk>& chunks, Embedder& embedder) {
  if (chunks.empty()) throw PreconditionError("build_chunk_index: no chunks");
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  ChunkIndex index;
  for (const auto& c : chunks) {
    texts.push_back(c.text);
    index.chunk_ids.push_back(c.chunk_id);
  }
  auto vectors = embedder.embed(texts);
  for (auto& v : vectors) v = unit(v);
  index.vectors = stack_rows(vectors);
  return index;
}

std::vector<ScoredRow> dense_top_m(const ChunkIndex& index, const Embedding& query, std::size_t m) {
  const Eigen::VectorXd q = unit(query);
  const Eigen::VectorXd scores = index.vectors * q;
  std::vector<ScoredRow> rows;
  rows.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) rows.push_back({i, scores[static_cast<Eigen::Index>(i)]});
  const auto keep = std::min(m, rows.size());
  std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(keep), rows.end(),
                    [&](const ScoredRow& a, const ScoredRow& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return index.chunk_ids[a.row] < index.chunk_ids[b.row];
                    });
  rows.resize(keep);
  return rows;
}

std::vector<RetrievedChunk> retrieve_chunks(const DocumentConcept& concept_info, const ChunkIndex& index,
                                            const std::vector<Chunk>& chunks, std::size_t m, std::size_t n,
                                            Embedder& embedder, Reranker& reranker, const Embedding* label_embedding) {
  if (chunks.size() != index.size()) throw PreconditionError("retrieve_chunks: chunk list does not match index");
  if (index.size() == 0) return {};
  if (n < 1 || n > m) throw PreconditionError("retrieve_chunks: requires 1 <= N <= M");
  if (m > index.size()) {
    warn(concept_info.concept_id, "M=" + std::to_string(m) + " exceeds index size " + std::to_string(index.size()) +
                                      "; clamped");
    m = index.size();
    n = std::min(n, m);
  }

  const Embedding query = label_embedding ? *label_embedding : embed_one(embedder, concept_info.label);
  const auto dense = dense_top_m(index, query, m);

  std::vector<std::string> texts;
  texts.reserve(dense.size());
  for (const auto& d : dense) texts.push_back(chunks[d.row].text);
  const auto reranked = reranker.rerank(concept_info.label, texts);

  std::vector<RetrievedChunk> out;
  for (const auto& r : reranked) {
    if (out.size() == n) break;
    const auto& d = dense.at(r.candidate_index);
    out.push_back({index.chunk_ids[d.row], d.row, r.score, d.score});
  }
  return out;
}

std::optional<Evidence> extract_evidence(const DocumentConcept& concept_info, const Chunk& chunk,
                                         std::size_t window_radius, double min_window_score, Embedder& embedder,
                                         const Embedding* label_embedding) {
  const auto sentences = split_sentences(chunk);
  if (sentences.empty()) return std::nullopt;

  const Embedding query = label_embedding ? *label_embedding : embed_one(embedder, concept_info.label);
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  const auto vectors = embedder.embed(texts);

  std::vector<double> scores(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) scores[i] = cosine(query, vectors[i]);

  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  if (scores[best] < min_window_score) return std::nullopt;

  const std::size_t last = sentences.size() - 1;
  auto window = [&](std::size_t center) {
    return std::pair{center >= window_radius ? center - window_radius : 0, std::min(last, center + window_radius)};
  };
  auto [lo, hi] = window(best);

  std::optional<std::size_t> second;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == best) continue;
    if (!second || scores[i] > scores[*second]) second = i;
  }
  if (second && scores[*second] >= min_window_score) {
    const auto [lo2, hi2] = window(*second);
    if (lo2 <= hi && lo <= hi2) {
      lo = std::min(lo, lo2);
      hi = std::max(hi, hi2);
    }
  }

  Evidence ev;
  ev.concept_id = concept_info.concept_id;
  ev.chunk_id = chunk.chunk_id;
  ev.evidence_id = concept_info.concept_id + "@" + chunk.chunk_id;
  ev.chunk_ordinal = chunk.ordinal;
  for (std::size_t i = lo; i <= hi; ++i) ev.sentence_indices.push_back(i);
  ev.text = chunk.text.substr(sentences[lo].begin, sentences[hi].end - sentences[lo].begin);
  ev.window_score = scores[best];
  return ev;
}

std::vector<QuestionStem> assemble_stems(const Document& doc, const std::vector<DocumentConcept>& concepts,
                                         const ChunkIndex& index, const std::vector<Chunk>& chunks,
                                         const EvidenceParams& params, Embedder& embedder, Reranker& reranker) {
  std::vector<QuestionStem> stems;
  for (const auto& dc : concepts) {
    const Embedding label = embed_one(embedder, dc.label);
    const auto retrieved = retrieve_chunks(dc, index, chunks, params.m, params.n, embedder, reranker, &label);
    QuestionStem stem;
    stem.stem_id = dc.concept_id;
    stem.document_concept = dc;
    stem.doc_id = doc.doc_id;
    for (const auto& r : retrieved) {
      auto ev = extract_evidence(dc, chunks[r.row], params.window_radius, params.min_window_score, embedder, &label);
      if (!ev) continue;
      ev->retrieval_score = r.score;
      stem.evidences.push_back(std::move(*ev));
    }
    if (!stem.evidences.empty()) stems.push_back(std::move(stem));
  }
  std::sort(stems.begin(), stems.end(), [](const QuestionStem& a, const QuestionStem& b) { return a.stem_id < b.stem_id; });
  return stems;
}

}  // namespace ragen
