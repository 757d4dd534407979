#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ragen/providers.hpp"

namespace ragen {

/// Writes `content` to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::optional<std::string> read_file(const std::filesystem::path& path);

/// One JSON file per key under `dir`, sharded by the key's first two hex
/// characters. Entries carry a header that must match on lookup, so a
/// truncated or foreign file reads as a miss.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key_for(std::string_view provider_id, std::string_view operation, const nlohmann::json& request);

  /// The cached response, or nullopt on a miss. Corrupt entries log a
  /// warning and count as misses.
  std::optional<nlohmann::json> lookup(std::string_view provider_id, std::string_view operation,
                                       const nlohmann::json& request) const;

  void store(std::string_view provider_id, std::string_view operation, const nlohmann::json& request,
             const nlohmann::json& response) const;

  std::filesystem::path path_for(const std::string& key) const;

 private:
  std::filesystem::path dir_;
};

/// Caching decorators. Hits bypass the wrapped provider and increment
/// `stats.cache_hits`; embeddings are cached per text so a batch only sends
/// the texts that missed.
std::shared_ptr<Generator> with_cache(std::shared_ptr<Generator> inner, const std::filesystem::path& cache_dir,
                                      std::shared_ptr<ProviderStats> stats);
std::shared_ptr<Embedder> with_cache(std::shared_ptr<Embedder> inner, const std::filesystem::path& cache_dir,
                                     std::shared_ptr<ProviderStats> stats);
std::shared_ptr<Reranker> with_cache(std::shared_ptr<Reranker> inner, const std::filesystem::path& cache_dir,
                                     std::shared_ptr<ProviderStats> stats);

/// Wraps all three providers of a set.
Providers with_cache(Providers providers, const std::filesystem::path& cache_dir);

}  // namespace ragen
