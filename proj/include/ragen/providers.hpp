#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ragen/linalg.hpp"

namespace ragen {

enum class ResponseFormat { free_text, json };

struct GenerationRequest {
  std::string prompt;
  int max_output_tokens = 2048;
  double temperature = 0.2;
  ResponseFormat response_format = ResponseFormat::json;
  /// Retry ordinal for parse retries. Part of the cache key, never sent.
  int attempt = 0;
};

/// Throws PreconditionError on max_output_tokens < 1 or temperature outside [0, 2].
void validate(const GenerationRequest& req);

struct RerankResult {
  std::size_t candidate_index = 0;
  double score = 0.0;
};

struct CallCounts {
  std::uint64_t generate_calls = 0;
  std::uint64_t embed_calls = 0;
  std::uint64_t rerank_calls = 0;
  std::uint64_t cache_hits = 0;

  std::uint64_t provider_calls() const { return generate_calls + embed_calls + rerank_calls; }
  CallCounts& operator+=(const CallCounts& o);
  CallCounts operator-(const CallCounts& o) const;
  bool operator==(const CallCounts&) const = default;
};

/// Atomic call counters shared by every provider of a run. A thread may also
/// install a Scope so calls made on it are attributed to a second sink.
class ProviderStats {
 public:
  void record_generate();
  void record_embed();
  void record_rerank();
  void record_cache_hit();

  CallCounts snapshot() const;

  class Scope {
   public:
    explicit Scope(CallCounts* sink);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    CallCounts* previous_;
  };

 private:
  std::atomic<std::uint64_t> generate_{0};
  std::atomic<std::uint64_t> embed_{0};
  std::atomic<std::uint64_t> rerank_{0};
  std::atomic<std::uint64_t> hits_{0};
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string id() const = 0;
  virtual std::string generate(const GenerationRequest& req) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  /// One vector per text, in input order.
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
};

class Reranker {
 public:
  virtual ~Reranker() = default;
  virtual std::string id() const = 0;
  /// Sorted by score descending, ties by ascending candidate_index.
  virtual std::vector<RerankResult> rerank(const std::string& query,
                                           const std::vector<std::string>& candidates) = 0;
};

struct Providers {
  std::shared_ptr<Generator> generator;
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<Reranker> reranker;
  std::shared_ptr<ProviderStats> stats;
};

/// Throws PreconditionError for an empty batch or a blank text.
void check_embed_batch(const std::vector<std::string>& texts);

/// Throws PreconditionError for an empty candidate list.
void check_rerank_batch(const std::vector<std::string>& candidates);

/// Applies the rerank ordering contract in place and returns the results.
std::vector<RerankResult> order_rerank_results(std::vector<RerankResult> results);

/// Convenience: embeds a single text.
Embedding embed_one(Embedder& embedder, const std::string& text);

}  // namespace ragen
