#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>

#include "ragen/providers.hpp"

namespace ragen {

struct HttpEndpoint {
  std::string base_url;     ///< e.g. "https://api.example.com/v1"
  std::string model;
  std::string api_key_env;  ///< name of the env var holding a bearer token; may be empty
  double timeout_seconds = 60.0;
};

/// Retries transport failures, timeouts, 429 and 5xx with exponential backoff
/// and jitter. Other statuses fail immediately.
struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{8000};
};

class HttpTransport;

/// Chat-completion endpoint: POST {base}/chat/completions with
/// {"model", "messages": [{"role": "user", "content": prompt}], ...};
/// reads choices[0].message.content.
class HttpGenerator : public Generator {
 public:
  HttpGenerator(HttpEndpoint endpoint, RetryPolicy retry, int max_concurrent, std::shared_ptr<ProviderStats> stats);
  ~HttpGenerator() override;

  std::string id() const override;
  std::string generate(const GenerationRequest& req) override;

 private:
  std::unique_ptr<HttpTransport> transport_;
  std::shared_ptr<ProviderStats> stats_;
};

/// Embeddings endpoint: POST {base}/embeddings with {"model", "input": [...]};
/// reads data[i].embedding ordered by data[i].index.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(HttpEndpoint endpoint, RetryPolicy retry, int max_concurrent, std::shared_ptr<ProviderStats> stats);
  ~HttpEmbedder() override;

  std::string id() const override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

 private:
  std::unique_ptr<HttpTransport> transport_;
  std::shared_ptr<ProviderStats> stats_;
  std::atomic<long> dim_{0};
};

/// Rerank endpoint: POST {base}/rerank with {"model", "query", "documents"};
/// reads results[i].{index, relevance_score}.
class HttpReranker : public Reranker {
 public:
  HttpReranker(HttpEndpoint endpoint, RetryPolicy retry, int max_concurrent, std::shared_ptr<ProviderStats> stats);
  ~HttpReranker() override;

  std::string id() const override;
  std::vector<RerankResult> rerank(const std::string& query, const std::vector<std::string>& candidates) override;

 private:
  std::unique_ptr<HttpTransport> transport_;
  std::shared_ptr<ProviderStats> stats_;
};

}  // namespace ragen
