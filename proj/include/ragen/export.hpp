#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragen/qacgen.hpp"

namespace ragen {

struct FileManifest {
  std::string path;  ///< as given to the writer
  std::size_t records = 0;
  std::string sha256;
};

/// One JSON object per line (LF, UTF-8), written atomically.
FileManifest write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::ordered_json>& rows);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Records in the given order, fields in the order of `to_json(QacRecord)`.
/// An empty list writes an empty file and warns.
FileManifest write_qac(const std::vector<QacRecord>& records, const std::filesystem::path& path);
std::vector<QacRecord> read_qac(const std::filesystem::path& path);

struct ContrastiveTriplet {
  std::string query;
  std::string positive;
  std::vector<std::string> negatives;  ///< [irrelevant, misleading]
  std::string record_id;
  std::string doc_id;
};

/// Records without all four context variants are skipped with a warning.
std::vector<ContrastiveTriplet> build_triplets(const std::vector<QacRecord>& records);
nlohmann::ordered_json to_json(const ContrastiveTriplet& t);
ContrastiveTriplet triplet_from_json(const nlohmann::json& j);

inline constexpr std::string_view kSftInstruction =
    "Answer the question using the passages below. Some passages may be unrelated to the question or may "
    "contain misleading statements; rely only on what the passages actually support.";

struct SftExample {
  std::string instruction;
  std::string input;
  std::string output;
  std::string record_id;
  bool with_distractors = false;
};

/// Input = "Passage k:" blocks + blank line + "Question: ...". With
/// distractors the golden, irrelevant and misleading passages appear in an
/// order shuffled by a seed derived from (seed, record_id).
std::vector<SftExample> build_sft(const std::vector<QacRecord>& records, bool with_distractors, std::uint64_t seed);
nlohmann::ordered_json to_json(const SftExample& e);
SftExample sft_from_json(const nlohmann::json& j);

/// Passage bodies of an SFT input, in order.
std::vector<std::string> sft_passages(const std::string& input);

struct DatasetStats {
  std::size_t total_records = 0;
  std::map<BloomLevel, std::size_t> per_bloom_counts;  ///< every level present, zeros included
  std::map<std::size_t, std::size_t> per_level_counts;
  double multi_chunk_fraction = 0.0;
  std::map<std::string, std::size_t> per_doc_counts;
};

DatasetStats compute_stats(const std::vector<QacRecord>& records);
nlohmann::ordered_json to_json(const DatasetStats& s);
/// Plain-text report with a Bloom histogram in taxonomy order.
std::string render_stats(const DatasetStats& s);

struct TrainingRecipe {
  std::string objective = "InfoNCE";
  double temperature_tau = 0.02;
  double learning_rate = 1e-5;
  int epochs = 3;
  int negatives_per_sample = 2;
};

nlohmann::ordered_json to_json(const TrainingRecipe& r);

}  // namespace ragen
