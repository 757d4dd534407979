#include "ragen/qacgen.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "ragen/corpus.hpp"
#include "ragen/diagnostics.hpp"
#include "ragen/digest.hpp"
#include "ragen/errors.hpp"
#include "ragen/linalg.hpp"
#include "ragen/rng.hpp"
#include "ragen/text.hpp"

using nlohmann::json;

namespace ragen {
namespace {

std::string one_line(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    if (is_space(c)) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

std::string strip_code_fence(const std::string& reply) {
  std::string t = trim(reply);
  if (t.rfind("```", 0) != 0) return t;
  const auto first_nl = t.find('\n');
  const auto last = t.rfind("```");
  if (first_nl == std::string::npos || last <= first_nl) return t;
  return trim(std::string_view(t).substr(first_nl + 1, last - first_nl - 1));
}

std::string join_labels(const StemCombo& combo, std::string_view sep) {
  std::string out;
  for (const auto& s : combo.stems) {
    if (!out.empty()) out += sep;
    out += s.document_concept.label;
  }
  return out;
}

const Evidence* find_evidence(const StemCombo& combo, const std::string& evidence_id) {
  for (const auto& s : combo.stems) {
    for (const auto& e : s.evidences) {
      if (e.evidence_id == evidence_id) return &e;
    }
  }
  return nullptr;
}

bool document_order(const Evidence* a, const Evidence* b) {
  if (a->chunk_id != b->chunk_id) return a->chunk_id < b->chunk_id;
  const auto sa = a->sentence_indices.empty() ? 0 : a->sentence_indices.front();
  const auto sb = b->sentence_indices.empty() ? 0 : b->sentence_indices.front();
  if (sa != sb) return sa < sb;
  return a->evidence_id < b->evidence_id;
}

std::vector<const Evidence*> cited_in_order(const QaDraft& draft, const StemCombo& combo) {
  std::vector<const Evidence*> out;
  for (const auto& id : draft.evidence_ids) {
    const Evidence* e = find_evidence(combo, id);
    if (e && std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  }
  std::sort(out.begin(), out.end(), document_order);
  return out;
}

std::string join_texts(const std::vector<const Evidence*>& evs) {
  std::string out;
  for (const auto* e : evs) {
    if (!out.empty()) out += kEvidenceJoiner;
    out += e->text;
  }
  return out;
}

/// Sentence window of `chunk` around the sentence with the lowest (or
/// highest) cosine to `query`.
std::string excerpt(const Chunk& chunk, const Embedding& query, bool most_similar, std::size_t radius,
                    Embedder& embedder) {
  const auto sentences = split_sentences(chunk);
  if (sentences.empty()) return chunk.text;
  std::vector<std::string> texts;
  for (const auto& s : sentences) texts.push_back(s.text);
  const auto vectors = embedder.embed(texts);
  std::size_t pick = 0;
  double pick_score = cosine(query, vectors[0]);
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    const double s = cosine(query, vectors[i]);
    if (most_similar ? s > pick_score : s < pick_score) {
      pick = i;
      pick_score = s;
    }
  }
  const std::size_t lo = pick >= radius ? pick - radius : 0;
  const std::size_t hi = std::min(sentences.size() - 1, pick + radius);
  return chunk.text.substr(sentences[lo].begin, sentences[hi].end - sentences[lo].begin);
}

struct Candidate {
  const Chunk* chunk = nullptr;
  Eigen::VectorXd vector;
};

}  // namespace

std::vector<std::string> StemCombo::stem_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : stems) ids.push_back(s.stem_id);
  return ids;
}

std::set<std::string> StemCombo::evidence_chunk_ids() const {
  std::set<std::string> ids;
  for (const auto& s : stems) {
    for (const auto& e : s.evidences) ids.insert(e.chunk_id);
  }
  return ids;
}

StemCombo make_combo(std::vector<QuestionStem> stems) {
  std::sort(stems.begin(), stems.end(), [](const QuestionStem& a, const QuestionStem& b) { return a.stem_id < b.stem_id; });
  StemCombo combo;
  combo.level = stems.size();
  for (const auto& s : stems) {
    if (!combo.combo_id.empty()) combo.combo_id += '+';
    combo.combo_id += s.stem_id;
  }
  combo.stems = std::move(stems);
  return combo;
}

std::size_t ComboCaps::for_level(std::size_t level) const {
  if (level <= 1) return kUnlimited;
  const auto it = per_level.find(level);
  return it == per_level.end() ? default_cap : it->second;
}

std::vector<StemCombo> enumerate_combinations(const std::vector<QuestionStem>& stems, std::size_t l_max,
                                              const ComboCaps& caps, std::uint64_t seed) {
  if (l_max < 1) throw PreconditionError("enumerate_combinations: l_max must be >= 1");
  std::vector<std::size_t> order(stems.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return stems[a].stem_id < stems[b].stem_id; });

  const std::size_t k = stems.size();
  std::vector<StemCombo> out;
  for (std::size_t level = 1; level <= std::min(l_max, k); ++level) {
    std::vector<std::vector<std::size_t>> picks;
    std::vector<std::size_t> idx(level);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      picks.push_back(idx);
      std::size_t i = level;
      while (i > 0 && idx[i - 1] == k - level + (i - 1)) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < level; ++j) idx[j] = idx[j - 1] + 1;
    }

    const std::size_t cap = caps.for_level(level);
    if (picks.size() > cap) {
      Rng rng(derive_seed(seed, "combos/level=" + std::to_string(level)));
      rng.shuffle(picks.begin(), picks.end());
      picks.resize(cap);
      std::sort(picks.begin(), picks.end());
    }
    for (const auto& p : picks) {
      std::vector<QuestionStem> chosen;
      for (auto i : p) chosen.push_back(stems[order[i]]);
      out.push_back(make_combo(std::move(chosen)));
    }
  }
  return out;
}

QaPrompt render_qa_prompt(const StemCombo& combo, const GenerationParams& params, const PromptTemplates& templates) {
  QaPrompt prompt;
  std::string evidences;
  std::size_t n = 0;
  for (std::size_t s = 0; s < combo.stems.size(); ++s) {
    const auto& stem = combo.stems[s];
    evidences += "Stem " + std::to_string(s + 1) + " concept: " + one_line(stem.document_concept.label) + "\n";
    for (const auto& e : stem.evidences) {
      const std::string label = "E" + std::to_string(++n);
      prompt.labels[label] = e.evidence_id;
      evidences += "[" + label + "] " + one_line(e.text) + "\n";
    }
  }
  if (!evidences.empty()) evidences.pop_back();

  std::string definitions;
  for (auto level : kBloomLevels) {
    definitions += "- " + std::string(to_string(level)) + ": " + std::string(bloom_definition(level)) + "\n";
  }
  if (!definitions.empty()) definitions.pop_back();
  std::string targets;
  for (auto level : params.bloom_targets) {
    if (!targets.empty()) targets += ", ";
    targets += to_string(level);
  }

  prompt.text = render_template(templates.generate_qa, {{"combination_level", std::to_string(combo.level)},
                                                        {"concept", join_labels(combo, "; ")},
                                                        {"evidences", evidences},
                                                        {"bloom_definitions", definitions},
                                                        {"bloom_targets", targets},
                                                        {"questions_per_combo", std::to_string(params.questions_per_combo)},
                                                        {"sentinel", std::string(kNoQuestionSentinel)}});
  return prompt;
}

std::vector<QaDraft> generate_qa(const StemCombo& combo, Generator& generator, const PromptTemplates& templates,
                                 const GenerationParams& params) {
  const bool has_evidence = std::any_of(combo.stems.begin(), combo.stems.end(),
                                        [](const QuestionStem& s) { return !s.evidences.empty(); });
  if (!has_evidence) throw PreconditionError("generate_qa: combo " + combo.combo_id + " has no evidence");

  const QaPrompt prompt = render_qa_prompt(combo, params, templates);
  GenerationRequest req;
  req.prompt = prompt.text;
  req.temperature = params.temperature;
  req.max_output_tokens = params.max_output_tokens;
  req.response_format = ResponseFormat::json;

  std::optional<json> parsed;
  const int attempts = std::max(1, params.json_retry);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    req.attempt = attempt;
    const std::string reply = strip_code_fence(generator.generate(req));
    if (reply == kNoQuestionSentinel) return {};
    try {
      json j = json::parse(reply);
      if (j.is_string() && j.get<std::string>() == kNoQuestionSentinel) return {};
      if (j.is_object() && j.contains("status") && j.at("status") == kNoQuestionSentinel) return {};
      if (j.is_object() && j.contains("questions")) j = j.at("questions");
      if (j.is_array()) {
        parsed = std::move(j);
        break;
      }
    } catch (const json::parse_error&) {
      if (reply.find(kNoQuestionSentinel) != std::string::npos) return {};
    }
  }
  if (!parsed) {
    throw ParseError("question generation for " + combo.combo_id + " returned no valid JSON after " +
                     std::to_string(attempts) + " attempts");
  }

  std::vector<QaDraft> drafts;
  for (const auto& item : *parsed) {
    if (drafts.size() == params.questions_per_combo) break;
    auto text_field = [&](const char* key) -> std::string {
      if (!item.is_object() || !item.contains(key) || !item.at(key).is_string()) return {};
      return trim(item.at(key).get<std::string>());
    };
    QaDraft d;
    d.question = text_field("question");
    d.answer = text_field("answer");
    d.reasoning = text_field("reasoning");
    const auto bloom = parse_bloom(text_field("bloom"));
    if (d.question.empty() || !bloom ||
        std::find(params.bloom_targets.begin(), params.bloom_targets.end(), *bloom) == params.bloom_targets.end()) {
      warn(combo.combo_id, "draft dropped: missing question or unrequested Bloom level");
      continue;
    }
    d.bloom = *bloom;

    bool foreign = false;
    if (item.contains("evidence_ids") && item.at("evidence_ids").is_array()) {
      for (const auto& id : item.at("evidence_ids")) {
        const auto label = id.is_string() ? trim(id.get<std::string>()) : std::string();
        const auto it = prompt.labels.find(label);
        if (it == prompt.labels.end()) {
          foreign = true;
          break;
        }
        if (std::find(d.evidence_ids.begin(), d.evidence_ids.end(), it->second) == d.evidence_ids.end()) {
          d.evidence_ids.push_back(it->second);
        }
      }
    }
    if (foreign || d.evidence_ids.empty()) {
      warn(combo.combo_id, "draft dropped: cites evidence outside the combo or none at all");
      continue;
    }
    drafts.push_back(std::move(d));
  }
  return drafts;
}

std::optional<ContextSet> curate_contexts(const QaDraft& draft, const StemCombo& combo, const CurationInputs& inputs,
                                          Embedder& embedder, Generator& generator, const PromptTemplates& templates,
                                          const CurationParams& params) {
  if (!inputs.chunks || !inputs.index || inputs.chunks->size() != inputs.index->size()) {
    throw PreconditionError("curate_contexts: document chunks and index are required and must match");
  }
  const auto cited = cited_in_order(draft, combo);
  if (cited.empty()) throw PreconditionError("curate_contexts: draft cites no evidence");

  ContextSet ctx;
  ctx.fully_supportive = join_texts(cited);
  for (const auto* e : cited) ctx.provenance.fully_supportive.push_back(e->evidence_id);

  if (cited.size() >= 2) {
    const std::vector<const Evidence*> partial(cited.begin(), cited.end() - 1);
    ctx.partially_supportive = join_texts(partial);
    for (const auto* e : partial) ctx.provenance.partially_supportive.push_back(e->evidence_id);
    ctx.provenance.partial_rule = "drop_last";
  } else {
    const Evidence& only = *cited.front();
    ctx.provenance.partially_supportive.push_back(only.evidence_id);
    const auto sentences = split_sentences(only.text);
    if (sentences.size() >= 2) {
      ctx.partially_supportive = sentences.front().text;
      ctx.provenance.partial_rule = "first_sentence";
    } else {
      const auto tokens = tokenize(only.text);
      if (tokens.size() < 2) {
        warn(combo.combo_id, "no strict partial context possible for a one-token evidence");
        return std::nullopt;
      }
      const std::size_t keep = (tokens.size() + 1) / 2;
      ctx.partially_supportive = only.text.substr(tokens.front().begin, tokens[keep - 1].end - tokens.front().begin);
      ctx.provenance.partial_rule = "leading_tokens";
    }
  }

  const auto excluded = combo.evidence_chunk_ids();
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < inputs.chunks->size(); ++i) {
    const Chunk& c = (*inputs.chunks)[i];
    if (!excluded.count(c.chunk_id)) candidates.push_back({&c, inputs.index->vectors.row(static_cast<Eigen::Index>(i)).transpose()});
  }
  if (candidates.empty() && inputs.sibling_chunks && inputs.sibling_index) {
    for (std::size_t i = 0; i < inputs.sibling_chunks->size(); ++i) {
      const Chunk& c = (*inputs.sibling_chunks)[i];
      if (!excluded.count(c.chunk_id)) {
        candidates.push_back({&c, inputs.sibling_index->vectors.row(static_cast<Eigen::Index>(i)).transpose()});
      }
    }
  }
  if (candidates.empty()) {
    warn(combo.combo_id, "no chunk outside the combo's evidence exists in the corpus; record dropped");
    return std::nullopt;
  }

  const Eigen::VectorXd domain = unit(Eigen::VectorXd(inputs.index->vectors.colwise().mean().transpose()));
  const Embedding question = embed_one(embedder, draft.question);

  const Candidate* irrelevant = nullptr;
  double best = 0.0;
  for (const auto& c : candidates) {
    const double s = cosine(c.vector, domain) - cosine(c.vector, question);
    if (!irrelevant || s > best || (s == best && c.chunk->chunk_id < irrelevant->chunk->chunk_id)) {
      irrelevant = &c;
      best = s;
    }
  }
  ctx.irrelevant = excerpt(*irrelevant->chunk, question, false, params.window_radius, embedder);
  ctx.provenance.irrelevant_chunk_id = irrelevant->chunk->chunk_id;

  std::string evidence_block;
  for (std::size_t i = 0; i < cited.size(); ++i) {
    evidence_block += "[E" + std::to_string(i + 1) + "] " + one_line(cited[i]->text) + "\n";
  }
  if (!evidence_block.empty()) evidence_block.pop_back();
  GenerationRequest req;
  req.prompt = render_template(templates.misleading_context,
                               {{"question", one_line(draft.question)}, {"concept", join_labels(combo, "; ")},
                                {"evidences", evidence_block}});
  req.temperature = params.temperature;
  req.max_output_tokens = params.max_output_tokens;
  try {
    const json j = json::parse(strip_code_fence(generator.generate(req)));
    if (j.is_object() && j.contains("passage") && j.at("passage").is_string()) {
      const std::string passage = trim(j.at("passage").get<std::string>());
      const bool copies_evidence = std::any_of(cited.begin(), cited.end(),
                                               [&](const Evidence* e) { return trim(e->text) == passage; });
      if (!passage.empty() && !copies_evidence && passage != ctx.fully_supportive) {
        ctx.misleading = passage;
        ctx.provenance.misleading_source = "generated";
      }
    }
  } catch (const json::parse_error&) {
  } catch (const ProviderError& e) {
    warn(combo.combo_id, std::string("misleading context generation failed: ") + e.what());
  }

  if (ctx.misleading.empty()) {
    const Candidate* nearest = nullptr;
    double near_score = 0.0;
    for (const auto& c : candidates) {
      if (&c == irrelevant && candidates.size() > 1) continue;
      const double s = cosine(c.vector, question);
      if (!nearest || s > near_score || (s == near_score && c.chunk->chunk_id < nearest->chunk->chunk_id)) {
        nearest = &c;
        near_score = s;
      }
    }
    ctx.misleading = excerpt(*nearest->chunk, question, true, params.window_radius, embedder);
    ctx.provenance.misleading_source = "chunk";
    ctx.provenance.misleading_chunk_id = nearest->chunk->chunk_id;
  }
  return ctx;
}

std::string make_record_id(const std::string& doc_id, const std::string& combo_id, const std::string& question) {
  return Hasher{}.add(doc_id).add(combo_id).add(question).hex().substr(0, 16);
}

ValidationResult RecordValidator::validate(const QaDraft& draft, const StemCombo& combo,
                                           const std::optional<ContextSet>& contexts) {
  auto reject = [](std::string reason) { return ValidationResult{std::nullopt, std::move(reason)}; };
  if (combo.stems.empty()) return reject("empty_combo");
  if (trim(draft.question).empty()) return reject("empty_question");
  if (trim(draft.answer).empty()) return reject("empty_answer");
  if (!contexts || contexts->fully_supportive.empty() || contexts->partially_supportive.empty() ||
      contexts->irrelevant.empty() || contexts->misleading.empty()) {
    return reject("missing_variant");
  }
  const auto cited = cited_in_order(draft, combo);
  if (cited.empty()) return reject("no_evidence");

  QacRecord r;
  r.doc_id = combo.stems.front().doc_id;
  r.combo_id = combo.combo_id;
  r.question = trim(draft.question);
  r.answer = trim(draft.answer);
  r.reasoning = trim(draft.reasoning);
  r.bloom = draft.bloom;
  r.combination_level = combo.level;
  for (const auto& s : combo.stems) {
    r.concept_ids.push_back(s.document_concept.concept_id);
    r.concept_labels.push_back(s.document_concept.label);
  }
  if (r.combination_level >= 2 && r.concept_ids.size() != r.combination_level) return reject("concept_count_mismatch");
  for (const auto* e : cited) {
    r.evidences.push_back(*e);
    if (std::find(r.evidence_chunk_ids.begin(), r.evidence_chunk_ids.end(), e->chunk_id) == r.evidence_chunk_ids.end()) {
      r.evidence_chunk_ids.push_back(e->chunk_id);
    }
  }
  if (std::find(r.evidence_chunk_ids.begin(), r.evidence_chunk_ids.end(), contexts->provenance.irrelevant_chunk_id) !=
      r.evidence_chunk_ids.end()) {
    return reject("irrelevant_overlaps_evidence");
  }
  r.contexts = *contexts;

  const std::string folded = fold_case(r.question);
  auto& seen = accepted_questions_[r.doc_id];
  if (seen.count(folded)) return reject("duplicate_question");
  seen.insert(folded);

  r.record_id = make_record_id(r.doc_id, r.combo_id, r.question);
  return {std::move(r), {}};
}

bool record_order(const QacRecord& a, const QacRecord& b) {
  if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
  if (a.combo_id != b.combo_id) return a.combo_id < b.combo_id;
  return sha256_hex(a.question) < sha256_hex(b.question);
}

}  // namespace ragen
