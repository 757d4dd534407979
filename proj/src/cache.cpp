#include "ragen/cache.hpp"

#include <array>
#include <atomic>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>
#include <thread>

#include "ragen/diagnostics.hpp"
#include "ragen/digest.hpp"
#include "ragen/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ragen {

void write_file_atomic(const fs::path& path, std::string_view content) {
  static std::atomic<std::uint64_t> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream suffix;
  suffix << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter.fetch_add(1);
  const fs::path tmp = path.string() + suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {}

std::string ResponseCache::key_for(std::string_view provider_id, std::string_view operation, const json& request) {
  return Hasher{}.add(provider_id).add(operation).add(request.dump()).hex();
}

fs::path ResponseCache::path_for(const std::string& key) const { return dir_ / key.substr(0, 2) / (key + ".json"); }

std::optional<json> ResponseCache::lookup(std::string_view provider_id, std::string_view operation,
                                          const json& request) const {
  const auto key = key_for(provider_id, operation, request);
  const auto path = path_for(key);
  const auto raw = read_file(path);
  if (!raw) return std::nullopt;
  try {
    const json entry = json::parse(*raw);
    if (entry.at("provider_id") != provider_id || entry.at("operation") != operation ||
        entry.at("request") != request || !entry.contains("response")) {
      warn("cache", "entry " + path.filename().string() + " does not match its request; recomputing");
      return std::nullopt;
    }
    json response = entry.at("response");
    return response;
  } catch (const json::exception& e) {
    warn("cache", "corrupt entry " + path.filename().string() + " (" + e.what() + "); recomputing");
    return std::nullopt;
  }
}

void ResponseCache::store(std::string_view provider_id, std::string_view operation, const json& request,
                          const json& response) const {
  const json entry = {{"provider_id", provider_id}, {"operation", operation}, {"request", request}, {"response", response}};
  write_file_atomic(path_for(key_for(provider_id, operation, request)), entry.dump());
}

namespace {

/// Serializes concurrent computations of the same key.
class KeyLocks {
 public:
  std::mutex& for_key(const std::string& key) { return mutexes_[hash64(key) % mutexes_.size()]; }

 private:
  std::array<std::mutex, 64> mutexes_;
};

json request_json(const GenerationRequest& req) {
  return {{"prompt", req.prompt},
          {"max_output_tokens", req.max_output_tokens},
          {"temperature", req.temperature},
          {"response_format", req.response_format == ResponseFormat::json ? "json" : "free_text"},
          {"attempt", req.attempt}};
}

class CachedGenerator : public Generator {
 public:
  CachedGenerator(std::shared_ptr<Generator> inner, const fs::path& dir, std::shared_ptr<ProviderStats> stats)
      : inner_(std::move(inner)), cache_(dir), stats_(std::move(stats)) {}

  std::string id() const override { return inner_->id(); }

  std::string generate(const GenerationRequest& req) override {
    validate(req);
    const json request = request_json(req);
    const auto provider = inner_->id();
    std::lock_guard lock(locks_.for_key(ResponseCache::key_for(provider, "generate", request)));
    if (auto hit = cache_.lookup(provider, "generate", request); hit && hit->is_string()) {
      if (stats_) stats_->record_cache_hit();
      return hit->get<std::string>();
    }
    std::string text = inner_->generate(req);
    cache_.store(provider, "generate", request, text);
    return text;
  }

 private:
  std::shared_ptr<Generator> inner_;
  ResponseCache cache_;
  std::shared_ptr<ProviderStats> stats_;
  KeyLocks locks_;
};

class CachedEmbedder : public Embedder {
 public:
  CachedEmbedder(std::shared_ptr<Embedder> inner, const fs::path& dir, std::shared_ptr<ProviderStats> stats)
      : inner_(std::move(inner)), cache_(dir), stats_(std::move(stats)) {}

  std::string id() const override { return inner_->id(); }

  std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
    check_embed_batch(texts);
    const auto provider = inner_->id();
    std::vector<Embedding> out(texts.size());
    std::vector<std::size_t> missing;
    std::vector<std::string> missing_texts;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const auto hit = cache_.lookup(provider, "embed", json{{"text", texts[i]}});
      if (hit && hit->is_array() && !hit->empty()) {
        const auto values = hit->get<std::vector<double>>();
        out[i] = Eigen::Map<const Embedding>(values.data(), static_cast<Eigen::Index>(values.size()));
        if (stats_) stats_->record_cache_hit();
      } else {
        missing.push_back(i);
        missing_texts.push_back(texts[i]);
      }
    }
    if (!missing.empty()) {
      auto fresh = inner_->embed(missing_texts);
      for (std::size_t j = 0; j < missing.size(); ++j) {
        const Embedding& v = fresh[j];
        cache_.store(provider, "embed", json{{"text", missing_texts[j]}},
                     std::vector<double>(v.data(), v.data() + v.size()));
        out[missing[j]] = std::move(fresh[j]);
      }
    }
    const auto dim = out.front().size();
    for (const auto& v : out) {
      if (v.size() != dim) throw ProviderError("embedding dimension mismatch within a batch", 0, 1, false);
    }
    return out;
  }

 private:
  std::shared_ptr<Embedder> inner_;
  ResponseCache cache_;
  std::shared_ptr<ProviderStats> stats_;
};

class CachedReranker : public Reranker {
 public:
  CachedReranker(std::shared_ptr<Reranker> inner, const fs::path& dir, std::shared_ptr<ProviderStats> stats)
      : inner_(std::move(inner)), cache_(dir), stats_(std::move(stats)) {}

  std::string id() const override { return inner_->id(); }

  std::vector<RerankResult> rerank(const std::string& query, const std::vector<std::string>& candidates) override {
    check_rerank_batch(candidates);
    const json request = {{"query", query}, {"candidates", candidates}};
    const auto provider = inner_->id();
    std::lock_guard lock(locks_.for_key(ResponseCache::key_for(provider, "rerank", request)));
    if (auto hit = cache_.lookup(provider, "rerank", request); hit && hit->is_array()) {
      std::vector<RerankResult> out;
      bool ok = true;
      for (const auto& r : *hit) {
        if (!r.is_array() || r.size() != 2) {
          ok = false;
          break;
        }
        out.push_back({r[0].get<std::size_t>(), r[1].get<double>()});
      }
      if (ok) {
        if (stats_) stats_->record_cache_hit();
        return out;
      }
    }
    auto out = inner_->rerank(query, candidates);
    json response = json::array();
    for (const auto& r : out) response.push_back({r.candidate_index, r.score});
    cache_.store(provider, "rerank", request, response);
    return out;
  }

 private:
  std::shared_ptr<Reranker> inner_;
  ResponseCache cache_;
  std::shared_ptr<ProviderStats> stats_;
  KeyLocks locks_;
};

}  // namespace

std::shared_ptr<Generator> with_cache(std::shared_ptr<Generator> inner, const fs::path& cache_dir,
                                      std::shared_ptr<ProviderStats> stats) {
  return std::make_shared<CachedGenerator>(std::move(inner), cache_dir, std::move(stats));
}

std::shared_ptr<Embedder> with_cache(std::shared_ptr<Embedder> inner, const fs::path& cache_dir,
                                     std::shared_ptr<ProviderStats> stats) {
  return std::make_shared<CachedEmbedder>(std::move(inner), cache_dir, std::move(stats));
}

std::shared_ptr<Reranker> with_cache(std::shared_ptr<Reranker> inner, const fs::path& cache_dir,
                                     std::shared_ptr<ProviderStats> stats) {
  return std::make_shared<CachedReranker>(std::move(inner), cache_dir, std::move(stats));
}

Providers with_cache(Providers providers, const fs::path& cache_dir) {
  Providers out;
  out.stats = providers.stats;
  out.generator = with_cache(std::move(providers.generator), cache_dir, out.stats);
  out.embedder = with_cache(std::move(providers.embedder), cache_dir, out.stats);
  out.reranker = with_cache(std::move(providers.reranker), cache_dir, out.stats);
  return out;
}

}  // namespace ragen
