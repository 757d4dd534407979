#include "ragen/export.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ragen/cache.hpp"
#include "ragen/diagnostics.hpp"
#include "ragen/digest.hpp"
#include "ragen/errors.hpp"
#include "ragen/rng.hpp"
#include "ragen/serialization.hpp"

using nlohmann::json;

namespace ragen {
namespace {

constexpr std::string_view kQuestionPrefix = "Question: ";

bool complete(const ContextSet& c) {
  return !c.fully_supportive.empty() && !c.partially_supportive.empty() && !c.irrelevant.empty() &&
         !c.misleading.empty();
}

std::string passage_block(const std::vector<std::string>& passages) {
  std::string out;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    out += "Passage " + std::to_string(i + 1) + ":\n" + passages[i] + "\n\n";
  }
  return out;
}

}  // namespace

FileManifest write_jsonl(const std::filesystem::path& path, const std::vector<ordered_json>& rows) {
  std::string content;
  for (const auto& row : rows) {
    content += row.dump();
    content += '\n';
  }
  write_file_atomic(path, content);
  return {path.string(), rows.size(), sha256_hex(content)};
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  const auto content = read_file(path);
  if (!content) throw PreconditionError("cannot read " + path.string());
  std::vector<json> rows;
  std::istringstream in(*content);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

FileManifest write_qac(const std::vector<QacRecord>& records, const std::filesystem::path& path) {
  if (records.empty()) warn("export", "no records to write to " + path.string());
  std::vector<ordered_json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  return write_jsonl(path, rows);
}

std::vector<QacRecord> read_qac(const std::filesystem::path& path) {
  std::vector<QacRecord> out;
  std::size_t line = 0;
  for (const auto& row : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(record_from_json(row));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ContrastiveTriplet> build_triplets(const std::vector<QacRecord>& records) {
  std::vector<ContrastiveTriplet> out;
  for (const auto& r : records) {
    if (r.question.empty() || !complete(r.contexts)) {
      warn("export", "record " + r.record_id + " lacks a context variant; no triplet");
      continue;
    }
    out.push_back({r.question, r.contexts.fully_supportive, {r.contexts.irrelevant, r.contexts.misleading},
                   r.record_id, r.doc_id});
  }
  return out;
}

ordered_json to_json(const ContrastiveTriplet& t) {
  return ordered_json{{"query", t.query},
                      {"pos", ordered_json::array({t.positive})},
                      {"neg", t.negatives},
                      {"meta", {{"record_id", t.record_id}, {"doc_id", t.doc_id}}}};
}

ContrastiveTriplet triplet_from_json(const json& j) {
  try {
    const auto pos = j.at("pos").get<std::vector<std::string>>();
    if (pos.size() != 1) throw ParseError("triplet 'pos' must hold exactly one text");
    return {j.at("query").get<std::string>(), pos.front(), j.at("neg").get<std::vector<std::string>>(),
            j.at("meta").at("record_id").get<std::string>(), j.at("meta").at("doc_id").get<std::string>()};
  } catch (const json::exception& e) {
    throw ParseError(std::string("triplet: ") + e.what());
  }
}

std::vector<SftExample> build_sft(const std::vector<QacRecord>& records, bool with_distractors, std::uint64_t seed) {
  std::vector<SftExample> out;
  for (const auto& r : records) {
    std::vector<std::string> passages{r.contexts.fully_supportive};
    if (with_distractors) {
      if (!complete(r.contexts)) {
        warn("export", "record " + r.record_id + " lacks a distractor; no distractor SFT example");
        continue;
      }
      passages.push_back(r.contexts.irrelevant);
      passages.push_back(r.contexts.misleading);
      Rng rng(derive_seed(seed, "sft/" + r.record_id));
      rng.shuffle(passages.begin(), passages.end());
    }
    SftExample e;
    e.instruction = kSftInstruction;
    e.input = passage_block(passages) + std::string(kQuestionPrefix) + r.question;
    e.output = r.answer;
    e.record_id = r.record_id;
    e.with_distractors = with_distractors;
    out.push_back(std::move(e));
  }
  return out;
}

ordered_json to_json(const SftExample& e) {
  return ordered_json{{"instruction", e.instruction},
                      {"input", e.input},
                      {"output", e.output},
                      {"meta", {{"record_id", e.record_id}, {"with_distractors", e.with_distractors}}}};
}

SftExample sft_from_json(const json& j) {
  try {
    SftExample e;
    e.instruction = j.at("instruction").get<std::string>();
    e.input = j.at("input").get<std::string>();
    e.output = j.at("output").get<std::string>();
    e.record_id = j.at("meta").at("record_id").get<std::string>();
    e.with_distractors = j.at("meta").at("with_distractors").get<bool>();
    return e;
  } catch (const json::exception& ex) {
    throw ParseError(std::string("sft example: ") + ex.what());
  }
}

std::vector<std::string> sft_passages(const std::string& input) {
  // Passages are "Passage k:\n<body>\n\n"; the question follows the last one.
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (std::size_t k = 1;; ++k) {
    const std::string header = "Passage " + std::to_string(k) + ":\n";
    if (input.compare(pos, header.size(), header) != 0) break;
    pos += header.size();
    const std::string next = "\n\nPassage " + std::to_string(k + 1) + ":\n";
    const std::string last = "\n\n" + std::string(kQuestionPrefix);
    auto end = input.find(next, pos);
    if (end == std::string::npos) end = input.rfind(last);
    if (end == std::string::npos || end < pos) break;
    out.push_back(input.substr(pos, end - pos));
    pos = end + 2;
  }
  return out;
}

DatasetStats compute_stats(const std::vector<QacRecord>& records) {
  DatasetStats s;
  for (auto level : kBloomLevels) s.per_bloom_counts[level] = 0;
  std::size_t multi = 0;
  for (const auto& r : records) {
    ++s.total_records;
    ++s.per_bloom_counts[r.bloom];
    ++s.per_level_counts[r.combination_level];
    ++s.per_doc_counts[r.doc_id];
    if (r.evidence_chunk_ids.size() >= 2) ++multi;
  }
  s.multi_chunk_fraction = records.empty() ? 0.0 : static_cast<double>(multi) / static_cast<double>(records.size());
  return s;
}

ordered_json to_json(const DatasetStats& s) {
  ordered_json bloom = ordered_json::object();
  for (auto level : kBloomLevels) bloom[std::string(to_string(level))] = s.per_bloom_counts.at(level);
  ordered_json levels = ordered_json::object();
  for (const auto& [l, n] : s.per_level_counts) levels[std::to_string(l)] = n;
  ordered_json docs = ordered_json::object();
  for (const auto& [d, n] : s.per_doc_counts) docs[d] = n;
  return ordered_json{{"total_records", s.total_records},
                      {"per_bloom_counts", bloom},
                      {"per_level_counts", levels},
                      {"multi_chunk_fraction", s.multi_chunk_fraction},
                      {"per_doc_counts", docs}};
}

std::string render_stats(const DatasetStats& s) {
  constexpr std::size_t kBarWidth = 40;
  std::size_t peak = 0;
  for (const auto& [level, n] : s.per_bloom_counts) peak = std::max(peak, n);

  std::ostringstream out;
  out << "records: " << s.total_records << "\n\nBloom level\n";
  for (auto level : kBloomLevels) {
    const std::size_t n = s.per_bloom_counts.count(level) ? s.per_bloom_counts.at(level) : 0;
    const std::size_t bar = peak == 0 ? 0 : (n * kBarWidth + peak - 1) / peak;
    std::string name(to_string(level));
    name.resize(14, ' ');
    out << "  " << name << std::string(bar, '#') << (bar ? " " : "") << n << "\n";
  }
  out << "\nCombination level\n";
  for (const auto& [l, n] : s.per_level_counts) out << "  l=" << l << "  " << n << "\n";
  char frac[32];
  std::snprintf(frac, sizeof frac, "%.4f", s.multi_chunk_fraction);
  out << "\nmulti-chunk fraction: " << frac << "\n\nPer document\n";
  for (const auto& [d, n] : s.per_doc_counts) out << "  " << d << "  " << n << "\n";
  return out.str();
}

ordered_json to_json(const TrainingRecipe& r) {
  return ordered_json{{"objective", r.objective},
                      {"temperature_tau", r.temperature_tau},
                      {"learning_rate", r.learning_rate},
                      {"epochs", r.epochs},
                      {"negatives_per_sample", r.negatives_per_sample}};
}

}  // namespace ragen
