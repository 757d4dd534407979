#include "ragen/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "ragen/diagnostics.hpp"
#include "ragen/errors.hpp"
#include "ragen/text.hpp"

using nlohmann::json;

namespace ragen {
namespace {

std::string strip_code_fence(const std::string& reply) {
  std::string t = trim(reply);
  if (t.rfind("```", 0) != 0) return t;
  const auto first_nl = t.find('\n');
  const auto last = t.rfind("```");
  if (first_nl == std::string::npos || last <= first_nl) return t;
  return trim(std::string_view(t).substr(first_nl + 1, last - first_nl - 1));
}

double similarity(const Embedding& a, const Embedding& b) {
  if (a.size() == b.size() && (a.array() == b.array()).all()) return 1.0;
  return cosine(a, b);
}

}  // namespace

ChunkConcept make_chunk_concept(std::string text, std::string chunk_id, std::string doc_id) {
  ChunkConcept c;
  c.normalized = normalize_phrase(text);
  c.text = std::move(text);
  c.chunk_id = std::move(chunk_id);
  c.doc_id = std::move(doc_id);
  return c;
}

std::string make_concept_id(const std::string& doc_id, std::size_t cluster) {
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, "#k%03zu", cluster);
  return doc_id + suffix;
}

std::optional<std::vector<std::string>> parse_concept_list(const std::string& reply) {
  json j;
  try {
    j = json::parse(strip_code_fence(reply));
  } catch (const json::parse_error&) {
    return std::nullopt;
  }
  if (j.is_object() && j.contains("concepts")) j = j.at("concepts");
  if (!j.is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& item : j) {
    if (!item.is_string()) return std::nullopt;
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<ChunkConcept> extract_chunk_concepts(const Chunk& chunk, Generator& generator,
                                                 const PromptTemplates& templates, const ExtractionParams& params) {
  if (trim(chunk.text).empty()) throw PreconditionError("extract_chunk_concepts: empty chunk " + chunk.chunk_id);
  GenerationRequest req;
  req.prompt = render_template(templates.extract_concepts,
                               {{"chunk", chunk.text}, {"max_concepts", std::to_string(params.max_concepts_per_chunk)}});
  req.temperature = params.temperature;
  req.max_output_tokens = params.max_output_tokens;
  req.response_format = ResponseFormat::json;

  std::optional<std::vector<std::string>> parsed;
  const int attempts = std::max(1, params.json_retry);
  for (int attempt = 0; attempt < attempts && !parsed; ++attempt) {
    req.attempt = attempt;
    parsed = parse_concept_list(generator.generate(req));
  }
  if (!parsed) {
    throw ParseError("concept extraction for " + chunk.chunk_id + " returned no valid JSON list after " +
                     std::to_string(attempts) + " attempts");
  }

  std::vector<ChunkConcept> out;
  std::set<std::string> seen;
  for (auto& raw : *parsed) {
    std::string text = trim(raw);
    if (text.empty()) continue;
    auto c = make_chunk_concept(std::move(text), chunk.chunk_id, chunk.doc_id);
    if (!seen.insert(c.normalized).second) continue;
    out.push_back(std::move(c));
    if (out.size() == params.max_concepts_per_chunk) break;
  }
  return out;
}

DedupResult dedup_concepts_embedded(const std::vector<ChunkConcept>& concepts, Embedder& embedder, double threshold) {
  std::vector<ChunkConcept> exact;
  std::set<std::string> seen;
  for (const auto& c : concepts) {
    if (seen.insert(c.normalized).second) exact.push_back(c);
  }
  DedupResult result;
  if (exact.empty()) return result;

  std::vector<std::string> texts;
  texts.reserve(exact.size());
  for (const auto& c : exact) texts.push_back(c.text);
  auto vectors = embedder.embed(texts);

  for (std::size_t i = 0; i < exact.size(); ++i) {
    const bool near_duplicate = std::any_of(result.embeddings.begin(), result.embeddings.end(),
                                            [&](const Embedding& kept) { return similarity(vectors[i], kept) >= threshold; });
    if (near_duplicate) continue;
    result.concepts.push_back(std::move(exact[i]));
    result.embeddings.push_back(std::move(vectors[i]));
  }
  return result;
}

std::vector<ChunkConcept> dedup_concepts(const std::vector<ChunkConcept>& concepts, Embedder& embedder,
                                         double threshold) {
  return dedup_concepts_embedded(concepts, embedder, threshold).concepts;
}

std::vector<DocumentConcept> select_representatives(const ConceptClustering& clustering,
                                                    const std::vector<ChunkConcept>& concepts,
                                                    const std::vector<Embedding>& embeddings,
                                                    const std::string& doc_id, RepresentativeMode mode,
                                                    Generator* generator, const PromptTemplates* templates) {
  if (mode == RepresentativeMode::llm_summary && (!generator || !templates)) {
    throw PreconditionError("select_representatives: summary mode needs a generator and templates");
  }
  const std::size_t k = clustering.k();
  std::vector<DocumentConcept> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    out[c].concept_id = make_concept_id(doc_id, c);
    out[c].doc_id = doc_id;
    out[c].centroid = clustering.centroids.row(static_cast<Eigen::Index>(c)).transpose();
  }
  std::vector<std::vector<std::size_t>> member_index(k);
  for (std::size_t i = 0; i < clustering.assignments.size(); ++i) {
    out[clustering.assignments[i]].members.push_back(concepts[i]);
    member_index[clustering.assignments[i]].push_back(i);
  }

  for (std::size_t c = 0; c < k; ++c) {
    auto& dc = out[c];
    const auto& idx = member_index[c];
    if (idx.empty()) throw std::logic_error("select_representatives: empty cluster");

    std::size_t best = idx.front();
    double best_d = (embeddings[best] - dc.centroid).squaredNorm();
    for (std::size_t j = 1; j < idx.size(); ++j) {
      const std::size_t i = idx[j];
      const double d = (embeddings[i] - dc.centroid).squaredNorm();
      const double tol = 1e-12 * std::max(1.0, std::max(d, best_d));
      if (d < best_d - tol || (std::abs(d - best_d) <= tol && concepts[i].normalized < concepts[best].normalized)) {
        best = i;
        best_d = d;
      }
    }
    dc.label = concepts[best].text;

    if (mode == RepresentativeMode::llm_summary) {
      std::string members;
      for (const auto& m : dc.members) members += "- " + m.text + "\n";
      if (!members.empty()) members.pop_back();
      GenerationRequest req;
      req.prompt = render_template(templates->summarize_cluster, {{"members", members}});
      req.max_output_tokens = 64;
      std::string label;
      try {
        const json j = json::parse(strip_code_fence(generator->generate(req)));
        if (j.is_object() && j.contains("label") && j.at("label").is_string()) label = trim(j.at("label").get<std::string>());
      } catch (const json::parse_error&) {
      }
      std::size_t words = 0;
      for (const auto& t : token_strings(label)) words += is_word(t) ? 1 : 0;
      if (!label.empty() && words <= 8) {
        dc.label = label;
        dc.summarized = true;
      } else {
        warn(dc.concept_id, "cluster summary unusable; using centroid representative");
      }
    }
  }
  return out;
}

std::size_t default_concept_count(std::size_t unique_concepts) {
  const auto k = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(unique_concepts))));
  return std::min(std::clamp<std::size_t>(k, 3, 12), unique_concepts);
}

FusionResult fuse_concepts(const Document& doc, const std::vector<ChunkConcept>& chunk_concepts, Embedder& embedder,
                           const FusionParams& params, Generator* generator, const PromptTemplates* templates) {
  if (chunk_concepts.empty()) throw PreconditionError("fuse_concepts: no chunk concepts for " + doc.doc_id);
  auto dedup = dedup_concepts_embedded(chunk_concepts, embedder, params.dedup_threshold);
  const std::size_t n = dedup.concepts.size();
  const std::size_t k = std::min(params.k.value_or(default_concept_count(n)), n);

  Eigen::MatrixXd points = stack_rows(dedup.embeddings);
  for (Eigen::Index i = 0; i < points.rows(); ++i) points.row(i).normalize();

  FusionResult result;
  result.clustering = kmeans(points, std::max<std::size_t>(k, 1), params.seed, params.max_iters);
  std::vector<Embedding> unit_vectors;
  unit_vectors.reserve(n);
  for (Eigen::Index i = 0; i < points.rows(); ++i) unit_vectors.push_back(points.row(i).transpose());
  result.concepts = select_representatives(result.clustering, dedup.concepts, unit_vectors, doc.doc_id, params.mode,
                                           generator, templates);
  result.unique_concepts = std::move(dedup.concepts);
  return result;
}

}  // namespace ragen
