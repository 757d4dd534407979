#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ragen/bloom.hpp"
#include "ragen/evidence.hpp"
#include "ragen/prompts.hpp"
#include "ragen/providers.hpp"

namespace ragen {

/// A set of stems generated from jointly. `combo_id` joins the sorted stem
/// ids with '+', so the same set always gets the same id.
struct StemCombo {
  std::string combo_id;
  std::vector<QuestionStem> stems;  ///< sorted by stem_id
  std::size_t level = 0;

  std::vector<std::string> stem_ids() const;
  /// Distinct chunk ids of all evidence in the combo.
  std::set<std::string> evidence_chunk_ids() const;
};

StemCombo make_combo(std::vector<QuestionStem> stems);

/// Per-level combo caps for levels >= 2. Level 1 is never capped.
struct ComboCaps {
  static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

  std::size_t default_cap = 50;
  std::map<std::size_t, std::size_t> per_level;

  std::size_t for_level(std::size_t level) const;
};

/// Level 1: every stem. Level >= 2: all C(K, l) combos in canonical order,
/// seeded shuffle, truncated to the level's cap, then returned in canonical
/// order. Levels with C(K, l) = 0 contribute nothing.
std::vector<StemCombo> enumerate_combinations(const std::vector<QuestionStem>& stems, std::size_t l_max,
                                              const ComboCaps& caps, std::uint64_t seed);

struct QaDraft {
  std::string question;
  std::string answer;
  std::string reasoning;
  BloomLevel bloom = BloomLevel::Remembering;
  std::vector<std::string> evidence_ids;  ///< cited evidence, as Evidence::evidence_id
};

struct GenerationParams {
  std::size_t questions_per_combo = 3;
  std::vector<BloomLevel> bloom_targets{kBloomLevels.begin(), kBloomLevels.end()};
  int json_retry = 3;
  double temperature = 0.2;
  int max_output_tokens = 2048;
};

/// The generation prompt for a combo, and the E<n> label -> evidence_id map
/// it uses.
struct QaPrompt {
  std::string text;
  std::map<std::string, std::string> labels;
};

QaPrompt render_qa_prompt(const StemCombo& combo, const GenerationParams& params, const PromptTemplates& templates);

/// One generation call per combo (plus parse retries). Drafts citing unknown
/// evidence, citing nothing, or using a level outside `bloom_targets` are
/// dropped. The no-question sentinel yields an empty list. Throws ParseError
/// when no attempt parses.
std::vector<QaDraft> generate_qa(const StemCombo& combo, Generator& generator, const PromptTemplates& templates,
                                 const GenerationParams& params);

struct ContextProvenance {
  std::vector<std::string> fully_supportive;      ///< evidence ids, document order
  std::vector<std::string> partially_supportive;  ///< evidence ids
  std::string partial_rule;                       ///< drop_last | first_sentence | leading_tokens
  std::string irrelevant_chunk_id;
  std::string misleading_source;                  ///< generated | chunk
  std::string misleading_chunk_id;                ///< set when misleading_source == chunk

  bool operator==(const ContextProvenance&) const = default;
};

struct ContextSet {
  std::string fully_supportive;
  std::string partially_supportive;
  std::string irrelevant;
  std::string misleading;
  ContextProvenance provenance;

  bool operator==(const ContextSet&) const = default;
};

inline constexpr std::string_view kEvidenceJoiner = "\n\n";

/// Chunks available for distractor selection. `chunks`/`index` are the
/// document's own; the sibling pair covers other documents of the corpus and
/// is consulted only when the document has no chunk outside the combo.
struct CurationInputs {
  const std::vector<Chunk>* chunks = nullptr;
  const ChunkIndex* index = nullptr;
  const std::vector<Chunk>* sibling_chunks = nullptr;
  const ChunkIndex* sibling_index = nullptr;
};

struct CurationParams {
  std::size_t window_radius = 1;
  double temperature = 0.2;
  int max_output_tokens = 512;
};

/// Builds the four context variants for a draft. Returns nullopt (with a
/// warning) when no chunk outside the combo exists anywhere in the corpus or
/// no strict partial subset can be formed.
std::optional<ContextSet> curate_contexts(const QaDraft& draft, const StemCombo& combo, const CurationInputs& inputs,
                                          Embedder& embedder, Generator& generator, const PromptTemplates& templates,
                                          const CurationParams& params);

struct QacRecord {
  std::string record_id;
  std::string doc_id;
  std::string combo_id;
  std::string question;
  std::string answer;
  std::string reasoning;
  BloomLevel bloom = BloomLevel::Remembering;
  std::size_t combination_level = 1;
  std::vector<std::string> concept_ids;
  std::vector<std::string> concept_labels;
  std::vector<std::string> evidence_chunk_ids;  ///< distinct, document order
  std::vector<Evidence> evidences;              ///< cited evidence, document order
  ContextSet contexts;
};

std::string make_record_id(const std::string& doc_id, const std::string& combo_id, const std::string& question);

struct ValidationResult {
  std::optional<QacRecord> record;
  std::string reason;  ///< machine-readable code when rejected

  bool accepted() const { return record.has_value(); }
};

/// Enforces record invariants and per-document question uniqueness
/// (case-folded). Keeps the accepted questions it has seen.
class RecordValidator {
 public:
  ValidationResult validate(const QaDraft& draft, const StemCombo& combo, const std::optional<ContextSet>& contexts);

 private:
  std::map<std::string, std::set<std::string>> accepted_questions_;
};

/// Sort key used before export: (doc_id, combo_id, sha256(question)).
bool record_order(const QacRecord& a, const QacRecord& b);

}  // namespace ragen
