#include "ragen/serialization.hpp"

#include "ragen/errors.hpp"

using nlohmann::json;

namespace ragen {
namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

ordered_json to_json(const Embedding& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Embedding embedding_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("embedding must be an array");
  Embedding v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

ordered_json to_json(const ChunkConcept& c) {
  return ordered_json{{"text", c.text}, {"chunk_id", c.chunk_id}, {"doc_id", c.doc_id}};
}

ChunkConcept chunk_concept_from_json(const json& j) {
  return make_chunk_concept(field<std::string>(j, "text"), field<std::string>(j, "chunk_id"),
                            field<std::string>(j, "doc_id"));
}

ordered_json to_json(const DocumentConcept& c) {
  ordered_json members = ordered_json::array();
  for (const auto& m : c.members) members.push_back(to_json(m));
  return ordered_json{{"concept_id", c.concept_id}, {"label", c.label},          {"doc_id", c.doc_id},
                      {"summarized", c.summarized}, {"members", std::move(members)}, {"centroid", to_json(c.centroid)}};
}

DocumentConcept document_concept_from_json(const json& j) {
  DocumentConcept c;
  c.concept_id = field<std::string>(j, "concept_id");
  c.label = field<std::string>(j, "label");
  c.doc_id = field<std::string>(j, "doc_id");
  c.summarized = field<bool>(j, "summarized");
  for (const auto& m : field<json>(j, "members")) c.members.push_back(chunk_concept_from_json(m));
  c.centroid = embedding_from_json(field<json>(j, "centroid"));
  return c;
}

ordered_json to_json(const Evidence& e) {
  return ordered_json{{"evidence_id", e.evidence_id},
                      {"concept_id", e.concept_id},
                      {"chunk_id", e.chunk_id},
                      {"chunk_ordinal", e.chunk_ordinal},
                      {"sentence_indices", e.sentence_indices},
                      {"text", e.text},
                      {"retrieval_score", e.retrieval_score},
                      {"window_score", e.window_score}};
}

Evidence evidence_from_json(const json& j) {
  Evidence e;
  e.evidence_id = field<std::string>(j, "evidence_id");
  e.concept_id = field<std::string>(j, "concept_id");
  e.chunk_id = field<std::string>(j, "chunk_id");
  e.chunk_ordinal = field<std::size_t>(j, "chunk_ordinal");
  e.sentence_indices = field<std::vector<std::size_t>>(j, "sentence_indices");
  e.text = field<std::string>(j, "text");
  e.retrieval_score = field<double>(j, "retrieval_score");
  e.window_score = field<double>(j, "window_score");
  return e;
}

ordered_json to_json(const QuestionStem& s) {
  ordered_json evs = ordered_json::array();
  for (const auto& e : s.evidences) evs.push_back(to_json(e));
  return ordered_json{
      {"stem_id", s.stem_id}, {"doc_id", s.doc_id}, {"concept", to_json(s.document_concept)}, {"evidences", evs}};
}

QuestionStem stem_from_json(const json& j) {
  QuestionStem s;
  s.stem_id = field<std::string>(j, "stem_id");
  s.doc_id = field<std::string>(j, "doc_id");
  s.document_concept = document_concept_from_json(field<json>(j, "concept"));
  for (const auto& e : field<json>(j, "evidences")) s.evidences.push_back(evidence_from_json(e));
  return s;
}

ordered_json to_json(const ContextSet& c) {
  const auto& p = c.provenance;
  return ordered_json{{"fully_supportive", c.fully_supportive},
                      {"partially_supportive", c.partially_supportive},
                      {"irrelevant", c.irrelevant},
                      {"misleading", c.misleading},
                      {"provenance",
                       {{"fully_supportive", p.fully_supportive},
                        {"partially_supportive", p.partially_supportive},
                        {"partial_rule", p.partial_rule},
                        {"irrelevant_chunk_id", p.irrelevant_chunk_id},
                        {"misleading_source", p.misleading_source},
                        {"misleading_chunk_id", p.misleading_chunk_id}}}};
}

ContextSet context_set_from_json(const json& j) {
  ContextSet c;
  c.fully_supportive = field<std::string>(j, "fully_supportive");
  c.partially_supportive = field<std::string>(j, "partially_supportive");
  c.irrelevant = field<std::string>(j, "irrelevant");
  c.misleading = field<std::string>(j, "misleading");
  const json p = field<json>(j, "provenance");
  c.provenance.fully_supportive = field<std::vector<std::string>>(p, "fully_supportive");
  c.provenance.partially_supportive = field<std::vector<std::string>>(p, "partially_supportive");
  c.provenance.partial_rule = field<std::string>(p, "partial_rule");
  c.provenance.irrelevant_chunk_id = field<std::string>(p, "irrelevant_chunk_id");
  c.provenance.misleading_source = field<std::string>(p, "misleading_source");
  c.provenance.misleading_chunk_id = field<std::string>(p, "misleading_chunk_id");
  return c;
}

ordered_json to_json(const QacRecord& r) {
  ordered_json evs = ordered_json::array();
  for (const auto& e : r.evidences) evs.push_back(to_json(e));
  return ordered_json{{"record_id", r.record_id},
                      {"doc_id", r.doc_id},
                      {"combo_id", r.combo_id},
                      {"combination_level", r.combination_level},
                      {"bloom", std::string(to_string(r.bloom))},
                      {"question", r.question},
                      {"answer", r.answer},
                      {"reasoning", r.reasoning},
                      {"concept_ids", r.concept_ids},
                      {"concept_labels", r.concept_labels},
                      {"evidence_chunk_ids", r.evidence_chunk_ids},
                      {"evidences", evs},
                      {"contexts", to_json(r.contexts)}};
}

QacRecord record_from_json(const json& j) {
  QacRecord r;
  r.record_id = field<std::string>(j, "record_id");
  r.doc_id = field<std::string>(j, "doc_id");
  r.combo_id = field<std::string>(j, "combo_id");
  r.combination_level = field<std::size_t>(j, "combination_level");
  const auto bloom = parse_bloom(field<std::string>(j, "bloom"));
  if (!bloom) throw ParseError("field 'bloom': unknown level");
  r.bloom = *bloom;
  r.question = field<std::string>(j, "question");
  r.answer = field<std::string>(j, "answer");
  r.reasoning = field<std::string>(j, "reasoning");
  r.concept_ids = field<std::vector<std::string>>(j, "concept_ids");
  r.concept_labels = field<std::vector<std::string>>(j, "concept_labels");
  r.evidence_chunk_ids = field<std::vector<std::string>>(j, "evidence_chunk_ids");
  if (j.contains("evidences")) {
    for (const auto& e : j.at("evidences")) r.evidences.push_back(evidence_from_json(e));
  }
  r.contexts = context_set_from_json(field<json>(j, "contexts"));
  return r;
}

bool operator==(const Evidence& a, const Evidence& b) {
  return a.evidence_id == b.evidence_id && a.concept_id == b.concept_id && a.chunk_id == b.chunk_id &&
         a.chunk_ordinal == b.chunk_ordinal && a.sentence_indices == b.sentence_indices && a.text == b.text &&
         a.retrieval_score == b.retrieval_score && a.window_score == b.window_score;
}

bool operator==(const QacRecord& a, const QacRecord& b) {
  return a.record_id == b.record_id && a.doc_id == b.doc_id && a.combo_id == b.combo_id &&
         a.question == b.question && a.answer == b.answer && a.reasoning == b.reasoning && a.bloom == b.bloom &&
         a.combination_level == b.combination_level && a.concept_ids == b.concept_ids &&
         a.concept_labels == b.concept_labels && a.evidence_chunk_ids == b.evidence_chunk_ids &&
         a.evidences == b.evidences && a.contexts == b.contexts;
}

}  // namespace ragen
