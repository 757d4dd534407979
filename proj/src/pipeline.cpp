#include "ragen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <thread>

#include "ragen/cache.hpp"
#include "ragen/concepts.hpp"
#include "ragen/corpus.hpp"
#include "ragen/diagnostics.hpp"
#include "ragen/digest.hpp"
#include "ragen/errors.hpp"
#include "ragen/evidence.hpp"
#include "ragen/http_providers.hpp"
#include "ragen/mock_providers.hpp"
#include "ragen/serialization.hpp"

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace ragen {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::concepts: return "concepts";
    case Stage::stems: return "stems";
    case Stage::qac: return "qac";
  }
  return "";
}

namespace {

constexpr std::string_view kStageFormat = "ragen-stage/1";

class StageCache {
 public:
  explicit StageCache(fs::path dir) : dir_(std::move(dir)) {}

  std::optional<json> load(Stage stage, const std::string& key) const {
    const fs::path path = path_for(stage, key);
    const auto content = read_file(path);
    if (!content) return std::nullopt;
    try {
      json entry = json::parse(*content);
      if (entry.at("format") != kStageFormat || entry.at("key") != key) {
        warn("stage-cache", "ignoring mismatched entry " + path.string());
        return std::nullopt;
      }
      return std::move(entry.at("artifact"));
    } catch (const json::exception&) {
      warn("stage-cache", "ignoring corrupt entry " + path.string());
      return std::nullopt;
    }
  }

  void store(Stage stage, const std::string& key, const ordered_json& artifact) const {
    ordered_json entry{{"format", kStageFormat}, {"stage", to_string(stage)}, {"key", key}, {"artifact", artifact}};
    write_file_atomic(path_for(stage, key), entry.dump());
  }

 private:
  fs::path path_for(Stage stage, const std::string& key) const {
    return dir_ / std::string(to_string(stage)) / (key + ".json");
  }

  fs::path dir_;
};

/// Chunks of the whole corpus and their index, built on first use.
class CorpusChunks {
 public:
  CorpusChunks(const std::vector<std::vector<Chunk>>& per_doc, std::string digest) : digest_(std::move(digest)) {
    for (const auto& chunks : per_doc) all_.insert(all_.end(), chunks.begin(), chunks.end());
  }

  const std::vector<Chunk>& chunks() const { return all_; }
  const std::string& digest() const { return digest_; }

  const ChunkIndex& index(Embedder& embedder) {
    std::call_once(once_, [&] { index_ = build_chunk_index(all_, embedder); });
    return index_;
  }

 private:
  std::vector<Chunk> all_;
  std::string digest_;
  std::once_flag once_;
  ChunkIndex index_;
};

struct StageTimes {
  std::mutex mutex;
  std::map<std::string, double> seconds;

  void add(std::string_view stage, double s) {
    std::lock_guard lock(mutex);
    seconds[std::string(stage)] += s;
  }
};

class Stopwatch {
 public:
  Stopwatch(StageTimes& times, std::string_view stage) : times_(times), stage_(stage) {}
  ~Stopwatch() {
    times_.add(stage_, std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
  }

 private:
  StageTimes& times_;
  std::string_view stage_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Context {
  const RunConfig& cfg;
  Stage stop_after;
  Providers providers;
  PromptTemplates templates;
  StageCache stages;
  CorpusChunks& corpus;
  StageTimes& times;
};

struct DocumentOutcome {
  DocumentReport report;
  std::vector<DocumentConcept> concepts;
  std::vector<QuestionStem> stems;
  std::vector<QacRecord> records;
  std::size_t provider_failures = 0;
  std::size_t transport_failures = 0;
};

std::string concepts_key(const Context& ctx, const Document& doc) {
  const auto& c = ctx.cfg.concepts;
  Hasher h;
  h.add("concepts/1").add(doc.doc_id).add(doc.content_hash);
  h.add(static_cast<std::int64_t>(ctx.cfg.chunking.chunk_size)).add(static_cast<std::int64_t>(ctx.cfg.chunking.chunk_overlap));
  h.add(static_cast<std::int64_t>(c.max_concepts_per_chunk)).add(static_cast<std::int64_t>(c.json_retry));
  h.add(c.dedup_threshold).add(c.k ? static_cast<std::int64_t>(*c.k) : std::int64_t{-1});
  h.add(static_cast<std::int64_t>(c.max_iters)).add(static_cast<std::int64_t>(ctx.cfg.seed));
  h.add(ctx.cfg.generation.temperature);
  h.add(ctx.providers.generator->id()).add(ctx.providers.embedder->id());
  h.add(ctx.templates.digest(PromptKind::extract_concepts));
  if (c.representative == RepresentativeMode::llm_summary) {
    h.add("llm_summary").add(ctx.templates.digest(PromptKind::summarize_cluster));
  } else {
    h.add("centroid");
  }
  return h.hex();
}

std::string stems_key(const Context& ctx, const std::string& upstream) {
  const auto& e = ctx.cfg.evidence;
  return Hasher{}
      .add("stems/1")
      .add(upstream)
      .add(static_cast<std::int64_t>(e.m))
      .add(static_cast<std::int64_t>(e.n))
      .add(static_cast<std::int64_t>(e.window_radius))
      .add(e.min_window_score)
      .add(ctx.providers.embedder->id())
      .add(ctx.providers.reranker->id())
      .hex();
}

std::string qac_key(const Context& ctx, const std::string& upstream) {
  const auto& g = ctx.cfg.generation;
  Hasher h;
  h.add("qac/1").add(upstream).add(static_cast<std::int64_t>(g.l_max));
  h.add(static_cast<std::int64_t>(std::min<std::size_t>(g.caps.default_cap, INT64_MAX)));
  for (const auto& [level, cap] : g.caps.per_level) {
    h.add(static_cast<std::int64_t>(level)).add(cap == ComboCaps::kUnlimited ? std::int64_t{-1} : static_cast<std::int64_t>(cap));
  }
  h.add(static_cast<std::int64_t>(g.questions_per_combo));
  for (auto b : g.bloom_targets) h.add(static_cast<std::int64_t>(rank(b)));
  h.add(g.temperature).add(static_cast<std::int64_t>(g.max_output_tokens)).add(static_cast<std::int64_t>(g.json_retry));
  h.add(static_cast<std::int64_t>(ctx.cfg.seed)).add(static_cast<std::int64_t>(ctx.cfg.evidence.window_radius));
  h.add(ctx.providers.generator->id()).add(ctx.providers.embedder->id());
  h.add(ctx.templates.digest(PromptKind::generate_qa)).add(ctx.templates.digest(PromptKind::misleading_context));
  return h.hex();
}

void note_provider_error(DocumentOutcome& out, const ProviderError& e, const std::string& scope) {
  ++out.provider_failures;
  if (e.transport()) ++out.transport_failures;
  warn(scope, std::string("provider error: ") + e.what());
}

bool run_concepts(Context& ctx, const Document& doc, const std::vector<Chunk>& chunks, const std::string& key,
                  DocumentOutcome& out) {
  if (auto cached = ctx.stages.load(Stage::concepts, key)) {
    try {
      for (const auto& c : cached->at("concepts")) out.concepts.push_back(document_concept_from_json(c));
      out.report.failed_chunks = cached->at("failed_chunks").get<std::size_t>();
      out.report.stages["concepts"] = "cached";
      return true;
    } catch (const std::exception& e) {
      warn(doc.doc_id, std::string("stage cache unusable, recomputing concepts: ") + e.what());
      out.concepts.clear();
    }
  }
  Stopwatch sw(ctx.times, "concepts");
  out.report.stages["concepts"] = "computed";
  const std::size_t failures_before = out.provider_failures;

  ExtractionParams ep;
  ep.max_concepts_per_chunk = ctx.cfg.concepts.max_concepts_per_chunk;
  ep.json_retry = ctx.cfg.concepts.json_retry;
  ep.temperature = ctx.cfg.generation.temperature;
  std::vector<ChunkConcept> extracted;
  for (const auto& chunk : chunks) {
    try {
      auto found = extract_chunk_concepts(chunk, *ctx.providers.generator, ctx.templates, ep);
      extracted.insert(extracted.end(), found.begin(), found.end());
    } catch (const ParseError& e) {
      ++out.report.failed_chunks;
      warn(chunk.chunk_id, std::string("concept extraction skipped: ") + e.what());
    } catch (const ProviderError& e) {
      ++out.report.failed_chunks;
      note_provider_error(out, e, chunk.chunk_id);
    }
  }

  ordered_json artifact{{"chunks", chunks.size()}, {"failed_chunks", out.report.failed_chunks}};
  if (!extracted.empty()) {
    FusionParams fp;
    fp.k = ctx.cfg.concepts.k;
    fp.dedup_threshold = ctx.cfg.concepts.dedup_threshold;
    fp.seed = ctx.cfg.seed;
    fp.max_iters = ctx.cfg.concepts.max_iters;
    fp.mode = ctx.cfg.concepts.representative;
    const auto fused = fuse_concepts(doc, extracted, *ctx.providers.embedder, fp, ctx.providers.generator.get(),
                                     &ctx.templates);
    out.concepts = fused.concepts;
    artifact["unique_concepts"] = fused.unique_concepts.size();
    artifact["kmeans"] = {{"k", fused.clustering.k()},
                          {"iterations", fused.clustering.iterations},
                          {"converged", fused.clustering.converged},
                          {"inertia_history", fused.clustering.inertia_history}};
  }
  ordered_json concepts = ordered_json::array();
  for (const auto& c : out.concepts) concepts.push_back(to_json(c));
  artifact["concepts"] = std::move(concepts);
  ordered_json chunk_concepts = ordered_json::array();
  for (const auto& c : extracted) chunk_concepts.push_back(to_json(c));
  artifact["chunk_concepts"] = std::move(chunk_concepts);

  // Provider failures are not cached, so a rerun retries them.
  if (out.provider_failures == failures_before) ctx.stages.store(Stage::concepts, key, artifact);
  return true;
}

void run_stems(Context& ctx, const Document& doc, const std::vector<Chunk>& chunks,
               const std::function<const ChunkIndex&()>& index, const std::string& key, DocumentOutcome& out) {
  if (auto cached = ctx.stages.load(Stage::stems, key)) {
    try {
      for (const auto& s : cached->at("stems")) out.stems.push_back(stem_from_json(s));
      out.report.stages["stems"] = "cached";
      return;
    } catch (const std::exception& e) {
      warn(doc.doc_id, std::string("stage cache unusable, recomputing stems: ") + e.what());
      out.stems.clear();
    }
  }
  Stopwatch sw(ctx.times, "stems");
  out.report.stages["stems"] = "computed";
  out.stems = assemble_stems(doc, out.concepts, index(), chunks, ctx.cfg.evidence, *ctx.providers.embedder,
                             *ctx.providers.reranker);
  ordered_json stems = ordered_json::array();
  for (const auto& s : out.stems) stems.push_back(to_json(s));
  ctx.stages.store(Stage::stems, key, ordered_json{{"stems", std::move(stems)}});
}

bool load_qac(Context& ctx, const Document& doc, const std::string& key, DocumentOutcome& out) {
  const auto cached = ctx.stages.load(Stage::qac, key);
  if (!cached) return false;
  try {
    const auto& sibling = cached->at("sibling_corpus_digest");
    if (!sibling.is_null() && sibling.get<std::string>() != ctx.corpus.digest()) return false;
    std::vector<QacRecord> records;
    for (const auto& r : cached->at("records")) records.push_back(record_from_json(r));
    out.records = std::move(records);
    out.report.combos = cached->at("combos").get<std::size_t>();
    out.report.failed_combos = cached->at("failed_combos").get<std::size_t>();
    out.report.rejections = cached->at("rejections").get<std::map<std::string, std::size_t>>();
    out.report.stages["qac"] = "cached";
    return true;
  } catch (const std::exception& e) {
    warn(doc.doc_id, std::string("stage cache unusable, recomputing records: ") + e.what());
    out.records.clear();
    return false;
  }
}

void run_qac(Context& ctx, const std::vector<Chunk>& chunks, const ChunkIndex& index, const std::string& key,
             DocumentOutcome& out) {
  Stopwatch sw(ctx.times, "qac");
  out.report.stages["qac"] = "computed";
  const auto& g = ctx.cfg.generation;
  const auto combos = enumerate_combinations(out.stems, g.l_max, g.caps, derive_seed(ctx.cfg.seed, out.report.doc_id));
  out.report.combos = combos.size();

  GenerationParams gp;
  gp.questions_per_combo = g.questions_per_combo;
  gp.bloom_targets = g.bloom_targets;
  gp.json_retry = g.json_retry;
  gp.temperature = g.temperature;
  gp.max_output_tokens = g.max_output_tokens;
  CurationParams cp;
  cp.window_radius = ctx.cfg.evidence.window_radius;
  cp.temperature = g.temperature;

  CurationInputs inputs{&chunks, &index, nullptr, nullptr};
  bool used_sibling = false;
  const std::size_t failures_before = out.provider_failures;
  RecordValidator validator;

  for (const auto& combo : combos) {
    try {
      const auto drafts = generate_qa(combo, *ctx.providers.generator, ctx.templates, gp);
      CurationInputs combo_inputs = inputs;
      if (!drafts.empty() && combo.evidence_chunk_ids().size() >= chunks.size()) {
        combo_inputs.sibling_chunks = &ctx.corpus.chunks();
        combo_inputs.sibling_index = &ctx.corpus.index(*ctx.providers.embedder);
        used_sibling = true;
      }
      for (const auto& draft : drafts) {
        const auto contexts = curate_contexts(draft, combo, combo_inputs, *ctx.providers.embedder,
                                              *ctx.providers.generator, ctx.templates, cp);
        auto result = validator.validate(draft, combo, contexts);
        if (result.accepted()) {
          out.records.push_back(std::move(*result.record));
        } else {
          ++out.report.rejections[result.reason];
        }
      }
    } catch (const ParseError& e) {
      ++out.report.failed_combos;
      warn(combo.combo_id, std::string("combo skipped: ") + e.what());
    } catch (const ProviderError& e) {
      ++out.report.failed_combos;
      note_provider_error(out, e, combo.combo_id);
    }
  }
  std::sort(out.records.begin(), out.records.end(), record_order);

  ordered_json records = ordered_json::array();
  for (const auto& r : out.records) records.push_back(to_json(r));
  ordered_json artifact{{"combos", out.report.combos},
                        {"failed_combos", out.report.failed_combos},
                        {"rejections", out.report.rejections},
                        {"sibling_corpus_digest", used_sibling ? ordered_json(ctx.corpus.digest()) : ordered_json()},
                        {"records", std::move(records)}};
  if (out.provider_failures == failures_before) ctx.stages.store(Stage::qac, key, artifact);
}

DocumentOutcome process_document(Context& ctx, const Document& doc, const std::vector<Chunk>& chunks) {
  DocumentOutcome out;
  out.report.doc_id = doc.doc_id;
  out.report.content_hash = doc.content_hash;
  out.report.chunks = chunks.size();
  ProviderStats::Scope scope(&out.report.calls);

  std::optional<ChunkIndex> index;
  auto chunk_index = [&]() -> const ChunkIndex& {
    if (!index) {
      Stopwatch sw(ctx.times, "index");
      index = build_chunk_index(chunks, *ctx.providers.embedder);
    }
    return *index;
  };

  auto skip = [&](std::string reason) {
    out.report.status = "skipped";
    out.report.reason = std::move(reason);
    Diagnostics::instance().info(doc.doc_id, "skipped: " + out.report.reason);
    return out;
  };

  try {
    if (chunks.empty()) return skip("document has no tokens");
    const std::string ck = concepts_key(ctx, doc);
    run_concepts(ctx, doc, chunks, ck, out);
    if (out.concepts.empty()) {
      out.report.unreachable = out.transport_failures > 0 && out.transport_failures == out.provider_failures;
      return skip(out.provider_failures ? "concept extraction failed at the provider" : "no concepts extracted");
    }
    if (ctx.stop_after == Stage::concepts) {
      out.report.status = out.report.stages["concepts"] == "cached" ? "cached" : "processed";
      return out;
    }

    const std::string sk = stems_key(ctx, ck);
    run_stems(ctx, doc, chunks, chunk_index, sk, out);
    if (out.stems.empty()) return skip("no concept has supporting evidence");
    if (ctx.stop_after == Stage::stems) {
      out.report.status = out.report.stages["stems"] == "cached" && out.report.stages["concepts"] == "cached"
                              ? "cached"
                              : "processed";
      return out;
    }

    const std::string qk = qac_key(ctx, sk);
    if (!load_qac(ctx, doc, qk, out)) run_qac(ctx, chunks, chunk_index(), qk, out);
  } catch (const ProviderError& e) {
    note_provider_error(out, e, doc.doc_id);
    out.report.unreachable = e.transport();
    return skip(std::string("provider error: ") + e.what());
  } catch (const ParseError& e) {
    return skip(std::string("unparseable provider output: ") + e.what());
  }

  out.report.records = out.records.size();
  const bool all_cached = std::all_of(out.report.stages.begin(), out.report.stages.end(),
                                      [](const auto& kv) { return kv.second == "cached"; });
  if (out.records.empty()) {
    out.report.unreachable = out.transport_failures > 0 && out.report.failed_combos == out.report.combos;
    return skip(out.report.failed_combos ? "every combo failed" : "no record passed validation");
  }
  out.report.status = all_cached ? "cached" : "processed";
  return out;
}

ordered_json counts_json(const CallCounts& c) {
  return {{"generate", c.generate_calls},
          {"embed", c.embed_calls},
          {"rerank", c.rerank_calls},
          {"provider_calls", c.provider_calls()},
          {"cache_hits", c.cache_hits}};
}

std::string corpus_digest(const RunConfig& cfg, const std::vector<Document>& docs) {
  Hasher h;
  h.add("corpus/1").add(static_cast<std::int64_t>(cfg.chunking.chunk_size));
  h.add(static_cast<std::int64_t>(cfg.chunking.chunk_overlap));
  for (const auto& d : docs) h.add(d.doc_id).add(d.content_hash);
  return h.hex();
}

}  // namespace

Providers make_providers(const RunConfig& cfg) {
  const auto& p = cfg.providers;
  if (p.mock) return make_mock_providers(cfg.seed, p.mock_embedding_dim, MockGeneratorOptions{p.mock_reject_disjoint});
  Providers out;
  out.stats = std::make_shared<ProviderStats>();
  RetryPolicy retry;
  retry.attempts = p.retry_attempts;
  out.generator = std::make_shared<HttpGenerator>(p.generator, retry, p.rate_limit, out.stats);
  out.embedder = std::make_shared<HttpEmbedder>(p.embedder, retry, p.rate_limit, out.stats);
  out.reranker = std::make_shared<HttpReranker>(p.reranker, retry, p.rate_limit, out.stats);
  return out;
}

std::map<std::string, FileManifest> write_exports(const std::vector<QacRecord>& records, const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  std::map<std::string, FileManifest> out;
  auto relative = [](FileManifest m) {
    m.path = fs::path(m.path).filename().string();
    return m;
  };
  out["qac.jsonl"] = relative(write_qac(records, cfg.out_dir / "qac.jsonl"));
  if (cfg.exports.triplets) {
    std::vector<ordered_json> rows;
    for (const auto& t : build_triplets(records)) rows.push_back(to_json(t));
    out["triplets.jsonl"] = relative(write_jsonl(cfg.out_dir / "triplets.jsonl", rows));
  }
  if (cfg.exports.sft) {
    std::vector<ordered_json> rows;
    for (const auto& e : build_sft(records, false, cfg.seed)) rows.push_back(to_json(e));
    out["sft.jsonl"] = relative(write_jsonl(cfg.out_dir / "sft.jsonl", rows));
  }
  if (cfg.exports.sft_distractor) {
    std::vector<ordered_json> rows;
    for (const auto& e : build_sft(records, true, cfg.seed)) rows.push_back(to_json(e));
    out["sft_distractor.jsonl"] = relative(write_jsonl(cfg.out_dir / "sft_distractor.jsonl", rows));
  }
  auto write_text = [&](const std::string& name, const std::string& content, std::size_t n) {
    write_file_atomic(cfg.out_dir / name, content);
    out[name] = FileManifest{name, n, sha256_hex(content)};
  };
  write_text("recipe.json", to_json(cfg.recipe).dump(2) + "\n", 1);
  const auto stats = compute_stats(records);
  write_text("stats.json", to_json(stats).dump(2) + "\n", 1);
  write_text("stats.txt", render_stats(stats), 1);
  return out;
}

RunResult run_pipeline(const RunConfig& cfg, const RunOptions& options) {
  validate_config(cfg);
  Diagnostics::instance().drain();
  const auto started = std::chrono::steady_clock::now();
  StageTimes times;

  RunResult result;
  IngestResult ingest;
  {
    Stopwatch sw(times, "ingest");
    ingest = ingest_documents(cfg.corpus_root, cfg.include_globs);
  }
  std::vector<std::vector<Chunk>> chunks(ingest.documents.size());
  {
    Stopwatch sw(times, "chunk");
    for (std::size_t i = 0; i < ingest.documents.size(); ++i) {
      chunks[i] = chunk_document(ingest.documents[i], cfg.chunking.chunk_size, cfg.chunking.chunk_overlap);
    }
  }
  CorpusChunks corpus(chunks, corpus_digest(cfg, ingest.documents));

  Providers base = options.providers ? *options.providers : make_providers(cfg);
  if (!base.stats) base.stats = std::make_shared<ProviderStats>();
  Providers providers = options.response_cache ? with_cache(base, cfg.cache_dir / "providers") : base;
  const CallCounts calls_before = providers.stats->snapshot();

  Context ctx{cfg,
              options.stop_after,
              providers,
              cfg.prompt_dir ? PromptTemplates::load(*cfg.prompt_dir) : PromptTemplates::defaults(),
              StageCache(cfg.cache_dir / "stages"),
              corpus,
              times};

  std::vector<DocumentOutcome> outcomes(ingest.documents.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ingest.documents.size(); i = next++) {
      outcomes[i] = process_document(ctx, ingest.documents[i], chunks[i]);
      Diagnostics::instance().info(ingest.documents[i].doc_id, outcomes[i].report.status);
    }
  };
  const std::size_t n_workers = std::min(effective_workers(cfg), std::max<std::size_t>(1, ingest.documents.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::size_t total_chunks = 0, failed_chunks = 0, total_combos = 0, failed_combos = 0;
  std::size_t needing_work = 0, unreachable = 0;
  for (auto& o : outcomes) {
    total_chunks += o.report.chunks;
    failed_chunks += o.report.failed_chunks;
    total_combos += o.report.combos;
    failed_combos += o.report.failed_combos;
    if (o.report.status != "cached") ++needing_work;
    if (o.report.unreachable) ++unreachable;
    result.records.insert(result.records.end(), o.records.begin(), o.records.end());
  }
  std::sort(result.records.begin(), result.records.end(), record_order);

  auto fraction = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  const bool over_budget = fraction(failed_chunks, total_chunks) > cfg.generation.error_budget ||
                           fraction(failed_combos, total_combos) > cfg.generation.error_budget;
  if (needing_work > 0 && unreachable == needing_work) {
    result.exit_code = kExitProviderUnreachable;
  } else if (over_budget) {
    result.exit_code = kExitErrorBudget;
  }

  fs::create_directories(cfg.out_dir);
  {
    Stopwatch sw(times, "export");
    if (options.stop_after == Stage::qac) {
      result.outputs = write_exports(result.records, cfg);
    } else {
      std::vector<ordered_json> rows;
      for (const auto& o : outcomes) {
        if (options.stop_after == Stage::concepts) {
          for (const auto& c : o.concepts) rows.push_back(to_json(c));
        } else {
          for (const auto& s : o.stems) rows.push_back(to_json(s));
        }
      }
      const std::string name = options.stop_after == Stage::concepts ? "concepts.jsonl" : "stems.jsonl";
      auto m = write_jsonl(cfg.out_dir / name, rows);
      m.path = name;
      result.outputs[name] = m;
    }
  }

  result.calls = providers.stats->snapshot() - calls_before;
  ordered_json documents = ordered_json::array();
  for (const auto& o : outcomes) {
    const auto& r = o.report;
    result.documents.push_back(r);
    documents.push_back({{"doc_id", r.doc_id},
                         {"content_hash", r.content_hash},
                         {"status", r.status},
                         {"reason", r.reason},
                         {"stages", r.stages},
                         {"chunks", r.chunks},
                         {"failed_chunks", r.failed_chunks},
                         {"combos", r.combos},
                         {"failed_combos", r.failed_combos},
                         {"records", r.records},
                         {"rejections", r.rejections},
                         {"calls", counts_json(r.calls)}});
  }
  for (const auto& e : ingest.errors) {
    DocumentReport r;
    r.doc_id = e.path;
    r.status = "skipped";
    r.reason = "unreadable: " + e.message;
    result.documents.push_back(r);
    documents.push_back({{"doc_id", r.doc_id}, {"status", r.status}, {"reason", r.reason}});
  }

  ordered_json outputs = ordered_json::object();
  for (const auto& [name, m] : result.outputs) outputs[name] = {{"records", m.records}, {"sha256", m.sha256}};
  times.add("total", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  ordered_json warnings = ordered_json::array();
  for (const auto& w : Diagnostics::instance().drain()) warnings.push_back({{"scope", w.scope}, {"message", w.message}});
  const ordered_json effective = to_json(cfg);

  result.manifest = ordered_json{
      {"config_digest", sha256_hex(effective.dump())},
      {"corpus_digest", corpus.digest()},
      {"stop_after", to_string(options.stop_after)},
      {"exit_code", result.exit_code},
      {"partial", result.exit_code != kExitOk},
      {"providers",
       {{"generator", providers.generator->id()},
        {"embedder", providers.embedder->id()},
        {"reranker", providers.reranker->id()},
        {"calls", counts_json(result.calls)}}},
      {"error_budget",
       {{"limit", cfg.generation.error_budget},
        {"chunks", total_chunks},
        {"failed_chunks", failed_chunks},
        {"combos", total_combos},
        {"failed_combos", failed_combos},
        {"exceeded", over_budget}}},
      {"documents", std::move(documents)},
      {"outputs", std::move(outputs)},
      {"stage_seconds", times.seconds},
      {"warnings", std::move(warnings)},
      {"config", effective}};
  write_file_atomic(cfg.out_dir / "manifest.json", result.manifest.dump(2) + "\n");
  return result;
}

}  // namespace ragen
