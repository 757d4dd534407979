#include "ragen/providers.hpp"

#include <algorithm>

#include "ragen/errors.hpp"
#include "ragen/text.hpp"

namespace ragen {
namespace {
thread_local CallCounts* tl_sink = nullptr;
}

void validate(const GenerationRequest& req) {
  if (req.max_output_tokens < 1) throw PreconditionError("max_output_tokens must be >= 1");
  if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) {
    throw PreconditionError("temperature must be in [0, 2]");
  }
}

CallCounts& CallCounts::operator+=(const CallCounts& o) {
  generate_calls += o.generate_calls;
  embed_calls += o.embed_calls;
  rerank_calls += o.rerank_calls;
  cache_hits += o.cache_hits;
  return *this;
}

CallCounts CallCounts::operator-(const CallCounts& o) const {
  return {generate_calls - o.generate_calls, embed_calls - o.embed_calls, rerank_calls - o.rerank_calls,
          cache_hits - o.cache_hits};
}

void ProviderStats::record_generate() {
  generate_.fetch_add(1, std::memory_order_relaxed);
  if (tl_sink) ++tl_sink->generate_calls;
}

void ProviderStats::record_embed() {
  embed_.fetch_add(1, std::memory_order_relaxed);
  if (tl_sink) ++tl_sink->embed_calls;
}

void ProviderStats::record_rerank() {
  rerank_.fetch_add(1, std::memory_order_relaxed);
  if (tl_sink) ++tl_sink->rerank_calls;
}

void ProviderStats::record_cache_hit() {
  hits_.fetch_add(1, std::memory_order_relaxed);
  if (tl_sink) ++tl_sink->cache_hits;
}

CallCounts ProviderStats::snapshot() const {
  return {generate_.load(), embed_.load(), rerank_.load(), hits_.load()};
}

ProviderStats::Scope::Scope(CallCounts* sink) : previous_(tl_sink) { tl_sink = sink; }

ProviderStats::Scope::~Scope() { tl_sink = previous_; }

void check_embed_batch(const std::vector<std::string>& texts) {
  if (texts.empty()) throw PreconditionError("embed: empty batch");
  for (const auto& t : texts) {
    if (trim(t).empty()) throw PreconditionError("embed: blank text in batch");
  }
}

void check_rerank_batch(const std::vector<std::string>& candidates) {
  if (candidates.empty()) throw PreconditionError("rerank: no candidates");
}

std::vector<RerankResult> order_rerank_results(std::vector<RerankResult> results) {
  std::stable_sort(results.begin(), results.end(), [](const RerankResult& a, const RerankResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.candidate_index < b.candidate_index;
  });
  return results;
}

Embedding embed_one(Embedder& embedder, const std::string& text) {
  return std::move(embedder.embed({text}).front());
}

}  // namespace ragen
