#include "ragen/config.hpp"

#include <fstream>
#include <set>
#include <thread>

#include "ragen/errors.hpp"

using nlohmann::json;
using nlohmann::ordered_json;

namespace ragen {
namespace {

class Reader {
 public:
  Reader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "must be an object");
  }

  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(name(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(name(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
            throw ConfigError(name(key), "must not be negative");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(name(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(name(key), "expected a string");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name(key), e.what());
    }
  }

  void path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    get(key, s);
    if (!has(key)) return;
    out = std::filesystem::path(s).is_absolute() ? std::filesystem::path(s) : base / s;
    out = out.lexically_normal();
  }

  Reader sub(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, name(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(name(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void read_endpoint(Reader r, HttpEndpoint& e) {
  r.get("base_url", e.base_url);
  r.get("model", e.model);
  r.get("api_key_env", e.api_key_env);
  r.get("timeout_seconds", e.timeout_seconds);
  r.finish();
}

ordered_json endpoint_json(const HttpEndpoint& e) {
  return {{"base_url", e.base_url}, {"model", e.model}, {"api_key_env", e.api_key_env},
          {"timeout_seconds", e.timeout_seconds}};
}

}  // namespace

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  Reader root(j, "");
  root.path("corpus_root", cfg.corpus_root, base_dir);
  if (root.has("include_globs")) {
    const json& g = root.raw("include_globs");
    if (!g.is_array()) throw ConfigError("include_globs", "expected a list of patterns");
    cfg.include_globs.clear();
    for (const auto& p : g) {
      if (!p.is_string()) throw ConfigError("include_globs", "patterns must be strings");
      cfg.include_globs.push_back(p.get<std::string>());
    }
  }
  cfg.out_dir = (base_dir / cfg.out_dir).lexically_normal();
  cfg.cache_dir = (base_dir / cfg.cache_dir).lexically_normal();
  root.path("out_dir", cfg.out_dir, base_dir);
  root.path("cache_dir", cfg.cache_dir, base_dir);
  if (root.has("prompt_dir")) {
    std::filesystem::path p;
    root.path("prompt_dir", p, base_dir);
    cfg.prompt_dir = p;
  }
  root.get("seed", cfg.seed);
  root.get("workers", cfg.workers);

  {
    auto r = root.sub("chunking");
    r.get("chunk_size", cfg.chunking.chunk_size);
    r.get("chunk_overlap", cfg.chunking.chunk_overlap);
    r.finish();
  }
  {
    auto r = root.sub("concepts");
    if (r.has("k")) {
      std::size_t k = 0;
      r.get("k", k);
      cfg.concepts.k = k;
    }
    r.get("dedup_threshold", cfg.concepts.dedup_threshold);
    r.get("max_concepts_per_chunk", cfg.concepts.max_concepts_per_chunk);
    r.get("max_iters", cfg.concepts.max_iters);
    r.get("json_retry", cfg.concepts.json_retry);
    std::string mode;
    r.get("representative", mode);
    if (mode == "llm_summary") {
      cfg.concepts.representative = RepresentativeMode::llm_summary;
    } else if (!mode.empty() && mode != "centroid") {
      throw ConfigError("concepts.representative", "expected \"centroid\" or \"llm_summary\"");
    }
    r.finish();
  }
  {
    auto r = root.sub("evidence");
    r.get("m", cfg.evidence.m);
    r.get("n", cfg.evidence.n);
    r.get("window_radius", cfg.evidence.window_radius);
    r.get("min_window_score", cfg.evidence.min_window_score);
    r.finish();
  }
  {
    auto r = root.sub("generation");
    auto& g = cfg.generation;
    r.get("l_max", g.l_max);
    r.get("default_cap", g.caps.default_cap);
    if (r.has("caps")) {
      const json& caps = r.raw("caps");
      if (!caps.is_object()) throw ConfigError("generation.caps", "expected an object of level -> cap");
      for (const auto& [level, cap] : caps.items()) {
        std::size_t l = 0;
        try {
          l = std::stoul(level);
        } catch (const std::exception&) {
          throw ConfigError("generation.caps." + level, "level must be an integer");
        }
        if (cap.is_string() && cap.get<std::string>() == "unlimited") {
          g.caps.per_level[l] = ComboCaps::kUnlimited;
        } else if (cap.is_number_integer() && cap.get<std::int64_t>() >= 0) {
          g.caps.per_level[l] = cap.get<std::size_t>();
        } else {
          throw ConfigError("generation.caps." + level, "expected a non-negative integer or \"unlimited\"");
        }
      }
    }
    r.get("questions_per_combo", g.questions_per_combo);
    if (r.has("bloom_targets")) {
      const json& b = r.raw("bloom_targets");
      if (!b.is_array()) throw ConfigError("generation.bloom_targets", "expected a list of level names");
      g.bloom_targets.clear();
      for (const auto& name : b) {
        const auto level = name.is_string() ? parse_bloom(name.get<std::string>()) : std::nullopt;
        if (!level) throw ConfigError("generation.bloom_targets", "unknown Bloom level " + name.dump());
        if (std::find(g.bloom_targets.begin(), g.bloom_targets.end(), *level) == g.bloom_targets.end()) {
          g.bloom_targets.push_back(*level);
        }
      }
      std::sort(g.bloom_targets.begin(), g.bloom_targets.end());
    }
    r.get("error_budget", g.error_budget);
    r.get("temperature", g.temperature);
    r.get("max_output_tokens", g.max_output_tokens);
    r.get("json_retry", g.json_retry);
    r.finish();
  }
  {
    auto r = root.sub("providers");
    auto& p = cfg.providers;
    r.get("mock", p.mock);
    r.get("mock_embedding_dim", p.mock_embedding_dim);
    r.get("mock_reject_disjoint", p.mock_reject_disjoint);
    r.get("rate_limit", p.rate_limit);
    r.get("retry_attempts", p.retry_attempts);
    read_endpoint(r.sub("generator"), p.generator);
    read_endpoint(r.sub("embedder"), p.embedder);
    read_endpoint(r.sub("reranker"), p.reranker);
    r.finish();
  }
  {
    auto r = root.sub("export");
    r.get("triplets", cfg.exports.triplets);
    r.get("sft", cfg.exports.sft);
    r.get("sft_distractor", cfg.exports.sft_distractor);
    r.finish();
  }
  {
    auto r = root.sub("recipe");
    r.get("objective", cfg.recipe.objective);
    r.get("temperature_tau", cfg.recipe.temperature_tau);
    r.get("learning_rate", cfg.recipe.learning_rate);
    r.get("epochs", cfg.recipe.epochs);
    r.get("negatives_per_sample", cfg.recipe.negatives_per_sample);
    r.finish();
  }
  root.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j, std::filesystem::absolute(path).parent_path());
}

void validate_config(const RunConfig& cfg) {
  auto require = [](bool ok, const char* field, const std::string& msg) {
    if (!ok) throw ConfigError(field, msg);
  };
  require(!cfg.corpus_root.empty(), "corpus_root", "is required");
  require(!cfg.include_globs.empty(), "include_globs", "needs at least one pattern");
  require(!cfg.out_dir.empty(), "out_dir", "is required");
  require(!cfg.cache_dir.empty(), "cache_dir", "is required");

  require(cfg.chunking.chunk_size >= 1, "chunking.chunk_size", "must be >= 1");
  require(cfg.chunking.chunk_overlap < cfg.chunking.chunk_size, "chunking.chunk_overlap",
          "must be smaller than chunk_size (" + std::to_string(cfg.chunking.chunk_size) + ")");

  require(!cfg.concepts.k || *cfg.concepts.k >= 1, "concepts.k", "must be >= 1");
  require(cfg.concepts.dedup_threshold > 0.0 && cfg.concepts.dedup_threshold <= 1.0, "concepts.dedup_threshold",
          "must be in (0, 1]");
  require(cfg.concepts.max_concepts_per_chunk >= 1, "concepts.max_concepts_per_chunk", "must be >= 1");
  require(cfg.concepts.max_iters >= 1, "concepts.max_iters", "must be >= 1");
  require(cfg.concepts.json_retry >= 1, "concepts.json_retry", "must be >= 1");

  require(cfg.evidence.m >= 1, "evidence.m", "must be >= 1");
  require(cfg.evidence.n >= 1, "evidence.n", "must be >= 1");
  require(cfg.evidence.n <= cfg.evidence.m, "evidence.n", "must not exceed evidence.m");
  require(cfg.evidence.min_window_score >= -1.0 && cfg.evidence.min_window_score <= 1.0,
          "evidence.min_window_score", "must be in [-1, 1]");

  const auto& g = cfg.generation;
  require(g.l_max >= 1, "generation.l_max", "must be >= 1");
  require(g.caps.default_cap >= 1, "generation.default_cap", "must be >= 1");
  for (const auto& [level, cap] : g.caps.per_level) {
    require(level >= 2, "generation.caps", "levels start at 2 (level 1 is never capped)");
    require(cap >= 1, "generation.caps", "caps must be >= 1");
  }
  require(g.questions_per_combo >= 1, "generation.questions_per_combo", "must be >= 1");
  require(!g.bloom_targets.empty(), "generation.bloom_targets", "needs at least one level");
  require(g.error_budget >= 0.0 && g.error_budget <= 1.0, "generation.error_budget", "must be in [0, 1]");
  require(g.temperature >= 0.0 && g.temperature <= 2.0, "generation.temperature", "must be in [0, 2]");
  require(g.max_output_tokens >= 1, "generation.max_output_tokens", "must be >= 1");
  require(g.json_retry >= 1, "generation.json_retry", "must be >= 1");

  const auto& p = cfg.providers;
  require(p.rate_limit >= 1 && p.rate_limit <= 1024, "providers.rate_limit", "must be in [1, 1024]");
  require(p.retry_attempts >= 1, "providers.retry_attempts", "must be >= 1");
  if (p.mock) {
    require(p.mock_embedding_dim >= 8, "providers.mock_embedding_dim", "must be >= 8");
  } else {
    require(!p.generator.base_url.empty(), "providers.generator.base_url", "is required without mock providers");
    require(!p.embedder.base_url.empty(), "providers.embedder.base_url", "is required without mock providers");
    require(!p.reranker.base_url.empty(), "providers.reranker.base_url", "is required without mock providers");
    for (const auto* e : {&p.generator, &p.embedder, &p.reranker}) {
      require(e->timeout_seconds > 0.0, "providers.*.timeout_seconds", "must be positive");
    }
  }

  require(!cfg.recipe.objective.empty(), "recipe.objective", "must not be empty");
  require(cfg.recipe.temperature_tau > 0.0, "recipe.temperature_tau", "must be positive");
  require(cfg.recipe.learning_rate > 0.0, "recipe.learning_rate", "must be positive");
  require(cfg.recipe.epochs >= 1, "recipe.epochs", "must be >= 1");
  require(cfg.recipe.negatives_per_sample == 2, "recipe.negatives_per_sample",
          "triplets carry exactly 2 negatives (irrelevant, misleading)");
}

ordered_json to_json(const RunConfig& cfg) {
  ordered_json caps = ordered_json::object();
  for (const auto& [level, cap] : cfg.generation.caps.per_level) {
    caps[std::to_string(level)] = cap == ComboCaps::kUnlimited ? ordered_json("unlimited") : ordered_json(cap);
  }
  std::vector<std::string> blooms;
  for (auto b : cfg.generation.bloom_targets) blooms.emplace_back(to_string(b));
  const auto& p = cfg.providers;
  return ordered_json{
      {"corpus_root", cfg.corpus_root.string()},
      {"include_globs", cfg.include_globs},
      {"out_dir", cfg.out_dir.string()},
      {"cache_dir", cfg.cache_dir.string()},
      {"prompt_dir", cfg.prompt_dir ? ordered_json(cfg.prompt_dir->string()) : ordered_json(nullptr)},
      {"seed", cfg.seed},
      {"workers", cfg.workers},
      {"chunking", {{"chunk_size", cfg.chunking.chunk_size}, {"chunk_overlap", cfg.chunking.chunk_overlap}}},
      {"concepts",
       {{"k", cfg.concepts.k ? ordered_json(*cfg.concepts.k) : ordered_json(nullptr)},
        {"dedup_threshold", cfg.concepts.dedup_threshold},
        {"max_concepts_per_chunk", cfg.concepts.max_concepts_per_chunk},
        {"max_iters", cfg.concepts.max_iters},
        {"representative", cfg.concepts.representative == RepresentativeMode::centroid ? "centroid" : "llm_summary"},
        {"json_retry", cfg.concepts.json_retry}}},
      {"evidence",
       {{"m", cfg.evidence.m},
        {"n", cfg.evidence.n},
        {"window_radius", cfg.evidence.window_radius},
        {"min_window_score", cfg.evidence.min_window_score}}},
      {"generation",
       {{"l_max", cfg.generation.l_max},
        {"default_cap", cfg.generation.caps.default_cap},
        {"caps", caps},
        {"questions_per_combo", cfg.generation.questions_per_combo},
        {"bloom_targets", blooms},
        {"error_budget", cfg.generation.error_budget},
        {"temperature", cfg.generation.temperature},
        {"max_output_tokens", cfg.generation.max_output_tokens},
        {"json_retry", cfg.generation.json_retry}}},
      {"providers",
       {{"mock", p.mock},
        {"mock_embedding_dim", p.mock_embedding_dim},
        {"mock_reject_disjoint", p.mock_reject_disjoint},
        {"rate_limit", p.rate_limit},
        {"retry_attempts", p.retry_attempts},
        {"generator", endpoint_json(p.generator)},
        {"embedder", endpoint_json(p.embedder)},
        {"reranker", endpoint_json(p.reranker)}}},
      {"export",
       {{"triplets", cfg.exports.triplets}, {"sft", cfg.exports.sft}, {"sft_distractor", cfg.exports.sft_distractor}}},
      {"recipe", to_json(cfg.recipe)}};
}

std::size_t effective_workers(const RunConfig& cfg) {
  if (cfg.workers > 0) return cfg.workers;
  const std::size_t cpus = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min<std::size_t>(cpus, static_cast<std::size_t>(cfg.providers.rate_limit)));
}

}  // namespace ragen
