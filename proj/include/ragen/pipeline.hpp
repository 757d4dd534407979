#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragen/config.hpp"
#include "ragen/export.hpp"
#include "ragen/providers.hpp"
#include "ragen/qacgen.hpp"

namespace ragen {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitErrorBudget = 2;
inline constexpr int kExitProviderUnreachable = 3;

enum class Stage { concepts, stems, qac };

std::string_view to_string(Stage stage);

struct RunOptions {
  Stage stop_after = Stage::qac;
  /// Replaces the providers built from the config. They are still wrapped
  /// with the response cache unless `response_cache` is false.
  std::optional<Providers> providers;
  bool response_cache = true;
};

struct DocumentReport {
  std::string doc_id;
  std::string content_hash;
  std::string status;  ///< processed | cached | skipped
  std::string reason;  ///< set when skipped
  std::map<std::string, std::string> stages;  ///< stage -> computed | cached
  CallCounts calls;
  std::size_t chunks = 0;
  std::size_t failed_chunks = 0;
  std::size_t combos = 0;
  std::size_t failed_combos = 0;
  std::size_t records = 0;
  std::map<std::string, std::size_t> rejections;
  bool unreachable = false;
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<DocumentReport> documents;
  std::vector<QacRecord> records;  ///< in export order
  std::map<std::string, FileManifest> outputs;
  CallCounts calls;
  nlohmann::ordered_json manifest;
};

/// Mock or HTTP providers as configured, sharing one ProviderStats. Not
/// cache-wrapped.
Providers make_providers(const RunConfig& cfg);

/// Ingest, then per document: chunk -> concepts -> stems -> QAC records,
/// each stage cached under a digest of its inputs; then export and stats.
/// Writes manifest.json to out_dir. Throws ConfigError for an invalid
/// config; everything else is reported through the exit code and manifest.
RunResult run_pipeline(const RunConfig& cfg, const RunOptions& options = {});

/// Writes qac.jsonl and the enabled downstream files, recipe and stats.
std::map<std::string, FileManifest> write_exports(const std::vector<QacRecord>& records, const RunConfig& cfg);

}  // namespace ragen
