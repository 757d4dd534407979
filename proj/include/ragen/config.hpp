#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragen/concepts.hpp"
#include "ragen/evidence.hpp"
#include "ragen/export.hpp"
#include "ragen/http_providers.hpp"
#include "ragen/qacgen.hpp"

namespace ragen {

struct ChunkingConfig {
  std::size_t chunk_size = 1024;
  std::size_t chunk_overlap = 200;
};

struct ConceptConfig {
  std::optional<std::size_t> k;  ///< unset: derived from the number of unique concepts
  double dedup_threshold = 0.92;
  std::size_t max_concepts_per_chunk = 8;
  std::size_t max_iters = 50;
  RepresentativeMode representative = RepresentativeMode::centroid;
  int json_retry = 3;
};

struct GenerationConfig {
  std::size_t l_max = 2;
  ComboCaps caps;
  std::size_t questions_per_combo = 3;
  std::vector<BloomLevel> bloom_targets{kBloomLevels.begin(), kBloomLevels.end()};
  double error_budget = 0.2;
  double temperature = 0.2;
  int max_output_tokens = 2048;
  int json_retry = 3;
};

struct ProviderConfig {
  bool mock = false;
  int mock_embedding_dim = 256;
  bool mock_reject_disjoint = false;
  int rate_limit = 4;
  int retry_attempts = 3;
  HttpEndpoint generator;
  HttpEndpoint embedder;
  HttpEndpoint reranker;
};

struct ExportConfig {
  bool triplets = true;
  bool sft = true;
  bool sft_distractor = true;
};

struct RunConfig {
  std::filesystem::path corpus_root;
  std::vector<std::string> include_globs{"*.txt", "*.md"};
  std::filesystem::path out_dir = "out";
  std::filesystem::path cache_dir = ".ragen-cache";
  std::optional<std::filesystem::path> prompt_dir;
  std::uint64_t seed = 0;
  std::size_t workers = 0;  ///< 0: min(CPU count, rate_limit)

  ChunkingConfig chunking;
  ConceptConfig concepts;
  EvidenceParams evidence;
  GenerationConfig generation;
  ProviderConfig providers;
  ExportConfig exports;
  TrainingRecipe recipe;
};

/// Parses a config object. Relative paths resolve against `base_dir`.
/// Unknown keys and type mismatches throw ConfigError naming the field.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Checks every value against the domain of the operation that consumes it.
/// Throws ConfigError with the dotted field name.
void validate_config(const RunConfig& cfg);

/// Effective config, every field spelled out.
nlohmann::ordered_json to_json(const RunConfig& cfg);

std::size_t effective_workers(const RunConfig& cfg);

}  // namespace ragen
