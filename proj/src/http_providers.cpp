#include "ragen/http_providers.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <random>
#include <semaphore>
#include <thread>

#include "ragen/diagnostics.hpp"
#include "ragen/errors.hpp"

using nlohmann::json;

namespace ragen {

class HttpTransport {
 public:
  HttpTransport(HttpEndpoint endpoint, RetryPolicy retry, int max_concurrent)
      : endpoint_(std::move(endpoint)), retry_(retry), slots_(std::max(1, max_concurrent)) {
    const auto scheme = endpoint_.base_url.find("://");
    const auto path_pos = endpoint_.base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_pos == std::string::npos) {
      origin_ = endpoint_.base_url;
    } else {
      origin_ = endpoint_.base_url.substr(0, path_pos);
      prefix_ = endpoint_.base_url.substr(path_pos);
    }
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  const HttpEndpoint& endpoint() const { return endpoint_; }

  json post(const std::string& path, const json& body) {
    httplib::Headers headers;
    if (!endpoint_.api_key_env.empty()) {
      if (const char* key = std::getenv(endpoint_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }
    const std::string payload = body.dump();
    const std::string url = prefix_ + path;

    int last_status = 0;
    std::string last_error;
    for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
      httplib::Result res;
      {
        slots_.acquire();
        httplib::Client client(origin_);
        const auto timeout = std::chrono::duration<double>(endpoint_.timeout_seconds);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        res = client.Post(url, headers, payload, "application/json");
        slots_.release();
      }

      bool retryable = false;
      if (!res) {
        last_status = 0;
        last_error = httplib::to_string(res.error());
        retryable = true;
      } else if (res->status >= 200 && res->status < 300) {
        try {
          return json::parse(res->body);
        } catch (const json::parse_error& e) {
          throw ProviderError("invalid JSON from " + origin_ + url + ": " + e.what(), res->status, attempt, false);
        }
      } else {
        last_status = res->status;
        last_error = "HTTP " + std::to_string(res->status);
        retryable = res->status == 429 || res->status >= 500;
      }

      if (!retryable) {
        throw ProviderError(origin_ + url + " answered " + last_error, last_status, attempt, false);
      }
      if (attempt < retry_.attempts) {
        warn("provider", origin_ + url + " attempt " + std::to_string(attempt) + " failed: " + last_error);
        std::this_thread::sleep_for(backoff(attempt));
      }
    }
    throw ProviderError(origin_ + url + " failed after " + std::to_string(retry_.attempts) + " attempts: " + last_error,
                        last_status, retry_.attempts, last_status == 0);
  }

 private:
  std::chrono::milliseconds backoff(int attempt) {
    thread_local std::mt19937 jitter{std::random_device{}()};
    const auto base = retry_.base_delay.count() * (1LL << std::min(attempt - 1, 20));
    const auto capped = std::min<long long>(base, retry_.max_delay.count());
    std::uniform_real_distribution<double> u(0.5, 1.0);
    return std::chrono::milliseconds(static_cast<long long>(static_cast<double>(capped) * u(jitter)));
  }

  HttpEndpoint endpoint_;
  RetryPolicy retry_;
  std::counting_semaphore<1024> slots_;
  std::string origin_;
  std::string prefix_;
};

namespace {

const json& require(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw ProviderError(what + ": response lacks '" + key + "'", 200, 1, false);
  }
  return j.at(key);
}

}  // namespace

HttpGenerator::HttpGenerator(HttpEndpoint endpoint, RetryPolicy retry, int max_concurrent,
                             std::shared_ptr<ProviderStats> stats)
    : transport_(std::make_unique<HttpTransport>(std::move(endpoint), retry, max_concurrent)),
      stats_(std::move(stats)) {}

HttpGenerator::~HttpGenerator() = default;

std::string HttpGenerator::id() const {
  return "http-chat/" + transport_->endpoint().base_url + "/" + transport_->endpoint().model;
}

std::string HttpGenerator::generate(const GenerationRequest& req) {
  validate(req);
  if (stats_) stats_->record_generate();
  json body = {{"model", transport_->endpoint().model},
               {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
               {"temperature", req.temperature},
               {"max_tokens", req.max_output_tokens}};
  if (req.response_format == ResponseFormat::json) body["response_format"] = {{"type", "json_object"}};
  const json res = transport_->post("/chat/completions", body);
  try {
      return res.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("chat completion response malformed: ") + e.what(), 200, 1, false);
  }
}

HttpEmbedder::HttpEmbedder(HttpEndpoint endpoint, RetryPolicy retry, int max_concurrent,
                           std::shared_ptr<ProviderStats> stats)
    : transport_(std::make_unique<HttpTransport>(std::move(endpoint), retry, max_concurrent)),
      stats_(std::move(stats)) {}

HttpEmbedder::~HttpEmbedder() = default;

std::string HttpEmbedder::id() const {
  return "http-embed/" + transport_->endpoint().base_url + "/" + transport_->endpoint().model;
}

std::vector<Embedding> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  check_embed_batch(texts);
  if (stats_) stats_->record_embed();
  const json res = transport_->post("/embeddings", {{"model", transport_->endpoint().model}, {"input", texts}});
  const json& data = require(res, "data", "embeddings");
  if (!data.is_array() || data.size() != texts.size()) {
    throw ProviderError("embeddings: expected " + std::to_string(texts.size()) + " vectors", 200, 1, false);
  }
  std::vector<Embedding> out(texts.size());
  try {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& item = data[i];
      const std::size_t index = item.contains("index") ? item.at("index").get<std::size_t>() : i;
      const auto values = require(item, "embedding", "embeddings").get<std::vector<double>>();
      if (index >= out.size() || values.empty()) throw ProviderError("embeddings: bad item", 200, 1, false);
      long expected = 0;
      const long dim = static_cast<long>(values.size());
      if (!dim_.compare_exchange_strong(expected, dim) && expected != dim) {
        throw ProviderError("embeddings: dimension changed from " + std::to_string(expected) + " to " +
                                std::to_string(dim),
                            200, 1, false);
      }
      out[index] = Eigen::Map<const Embedding>(values.data(), dim);
      if (!out[index].allFinite()) throw ProviderError("embeddings: non-finite component", 200, 1, false);
    }
  } catch (const json::exception& e) {
    throw ProviderError(std::string("embeddings response malformed: ") + e.what(), 200, 1, false);
  }
  return out;
}

HttpReranker::HttpReranker(HttpEndpoint endpoint, RetryPolicy retry, int max_concurrent,
                           std::shared_ptr<ProviderStats> stats)
    : transport_(std::make_unique<HttpTransport>(std::move(endpoint), retry, max_concurrent)),
      stats_(std::move(stats)) {}

HttpReranker::~HttpReranker() = default;

std::string HttpReranker::id() const {
  return "http-rerank/" + transport_->endpoint().base_url + "/" + transport_->endpoint().model;
}

std::vector<RerankResult> HttpReranker::rerank(const std::string& query, const std::vector<std::string>& candidates) {
  check_rerank_batch(candidates);
  if (stats_) stats_->record_rerank();
  const json res = transport_->post(
      "/rerank", {{"model", transport_->endpoint().model}, {"query", query}, {"documents", candidates}});
  const json& results = require(res, "results", "rerank");
  std::vector<RerankResult> out;
  std::vector<bool> seen(candidates.size(), false);
  try {
    for (const auto& r : results) {
      const auto index = require(r, "index", "rerank").get<std::size_t>();
      const double score = r.contains("relevance_score") ? r.at("relevance_score").get<double>()
                                                         : require(r, "score", "rerank").get<double>();
      if (index >= candidates.size() || seen[index]) throw ProviderError("rerank: bad candidate index", 200, 1, false);
      seen[index] = true;
      out.push_back({index, score});
    }
  } catch (const json::exception& e) {
    throw ProviderError(std::string("rerank response malformed: ") + e.what(), 200, 1, false);
  }
  return order_rerank_results(std::move(out));
}

}  // namespace ragen
