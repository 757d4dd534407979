#pragma once

#include <json.hpp>

#include "ragen/concepts.hpp"
#include "ragen/evidence.hpp"
#include "ragen/qacgen.hpp"

namespace ragen {

using ordered_json = nlohmann::ordered_json;

// JSON forms of pipeline artifacts. Writers use a fixed field order so files
// are byte-stable; readers throw ParseError naming the offending field.

ordered_json to_json(const Embedding& v);
Embedding embedding_from_json(const nlohmann::json& j);

ordered_json to_json(const ChunkConcept& c);
ChunkConcept chunk_concept_from_json(const nlohmann::json& j);

ordered_json to_json(const DocumentConcept& c);
DocumentConcept document_concept_from_json(const nlohmann::json& j);

ordered_json to_json(const Evidence& e);
Evidence evidence_from_json(const nlohmann::json& j);

ordered_json to_json(const QuestionStem& s);
QuestionStem stem_from_json(const nlohmann::json& j);

ordered_json to_json(const ContextSet& c);
ContextSet context_set_from_json(const nlohmann::json& j);

ordered_json to_json(const QacRecord& r);
QacRecord record_from_json(const nlohmann::json& j);

bool operator==(const Evidence& a, const Evidence& b);
bool operator==(const QacRecord& a, const QacRecord& b);

}  // namespace ragen
