#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ragen/providers.hpp"

namespace ragen {

struct MockGeneratorOptions {
  /// Answer the no-question sentinel for multi-stem combos whose stems share
  /// no content words.
  bool reject_disjoint_combos = false;
};

/// Offline generator. Recognizes the pipeline's prompt templates by their
/// task header and emits schema-valid JSON derived from a seeded digest of
/// the prompt and the salient words of its input.
class MockGenerator : public Generator {
 public:
  MockGenerator(std::uint64_t seed, std::shared_ptr<ProviderStats> stats, MockGeneratorOptions options = {});

  std::string id() const override;
  std::string generate(const GenerationRequest& req) override;

 private:
  std::string extract_concepts(const std::string& prompt, std::uint64_t digest) const;
  std::string summarize_cluster(const std::string& prompt) const;
  std::string generate_qa(const std::string& prompt, std::uint64_t digest) const;
  std::string misleading_context(const std::string& prompt, std::uint64_t digest) const;

  std::uint64_t seed_;
  std::shared_ptr<ProviderStats> stats_;
  MockGeneratorOptions options_;
};

/// Signed feature hashing of case-folded content words into `dim` buckets,
/// L2-normalized. Texts sharing words score higher than disjoint ones.
class MockEmbedder : public Embedder {
 public:
  MockEmbedder(int dim, std::uint64_t seed, std::shared_ptr<ProviderStats> stats);

  std::string id() const override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

  int dim() const { return dim_; }
  Embedding embed_text(const std::string& text) const;

 private:
  int dim_;
  std::uint64_t seed_;
  std::shared_ptr<ProviderStats> stats_;
};

/// Lexical reranker: fraction of the query's content words present in the
/// candidate, plus 1 when the candidate contains the whole query verbatim
/// (case-folded).
class MockReranker : public Reranker {
 public:
  explicit MockReranker(std::shared_ptr<ProviderStats> stats);

  std::string id() const override;
  std::vector<RerankResult> rerank(const std::string& query, const std::vector<std::string>& candidates) override;

  static double score(const std::string& query, const std::string& candidate);

 private:
  std::shared_ptr<ProviderStats> stats_;
};

Providers make_mock_providers(std::uint64_t seed, int dim = 256, MockGeneratorOptions options = {});

}  // namespace ragen
