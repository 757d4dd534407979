// ragen: corpus -> QAC dataset pipeline.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ragen/cache.hpp"
#include "ragen/config.hpp"
#include "ragen/corpus.hpp"
#include "ragen/diagnostics.hpp"
#include "ragen/errors.hpp"
#include "ragen/evalkit.hpp"
#include "ragen/export.hpp"
#include "ragen/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ragen;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool mock = false;
  std::string out;
  bool verbose = false;
  std::optional<std::size_t> workers;
};

RunConfig resolve_config(const GlobalFlags& flags) {
  if (flags.config.empty()) throw ConfigError("--config", "a config file is required for this command");
  RunConfig cfg = load_config(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.mock) cfg.providers.mock = true;
  if (!flags.out.empty()) cfg.out_dir = fs::absolute(flags.out).lexically_normal();
  if (flags.workers) cfg.workers = *flags.workers;
  validate_config(cfg);
  return cfg;
}

int report_run(const RunResult& r, const RunConfig& cfg) {
  std::size_t processed = 0, cached = 0, skipped = 0;
  for (const auto& d : r.documents) {
    if (d.status == "processed") ++processed;
    else if (d.status == "cached") ++cached;
    else ++skipped;
  }
  std::cout << "documents: " << processed << " processed, " << cached << " cached, " << skipped << " skipped\n"
            << "records: " << r.records.size() << "\n"
            << "provider calls: " << r.calls.provider_calls() << " (cache hits " << r.calls.cache_hits << ")\n"
            << "manifest: " << (cfg.out_dir / "manifest.json").string() << "\n";
  if (r.exit_code == kExitErrorBudget) std::cerr << "error budget exceeded; outputs are partial\n";
  if (r.exit_code == kExitProviderUnreachable) std::cerr << "providers unreachable\n";
  return r.exit_code;
}

std::map<std::string, std::string> read_predictions(const fs::path& path) {
  std::map<std::string, std::string> out;
  for (const auto& row : read_jsonl(path)) {
    if (!row.contains("record_id") || !row.contains("answer")) {
      throw ParseError(path.string() + ": prediction rows need record_id and answer");
    }
    out[row.at("record_id").get<std::string>()] = row.at("answer").get<std::string>();
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build question-answer-context datasets from a document corpus"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_flag("--mock-providers", g.mock, "Use the deterministic offline providers");
  app.add_option("--out", g.out, "Override out_dir");
  app.add_flag("--verbose", g.verbose, "Print progress and warnings to stderr");
  app.add_option("--workers", g.workers, "Documents processed in parallel (0: automatic)");

  auto* generate = app.add_subcommand("generate", "Run the full pipeline");
  auto* concepts = app.add_subcommand("concepts", "Extract and fuse concepts only");
  auto* stems = app.add_subcommand("stems", "Run through question-stem assembly");
  auto* export_cmd = app.add_subcommand("export", "Re-export downstream files from qac.jsonl");
  auto* eval = app.add_subcommand("eval", "Retrieval metrics and answer overlap for a QAC file");
  auto* stats = app.add_subcommand("stats", "Dataset statistics for a QAC file");
  auto* validate = app.add_subcommand("validate-config", "Check a configuration and exit");

  std::string qac_path, predictions_path;
  std::size_t sample_size = 0;
  eval->add_option("--qac", qac_path, "QAC file (default: <out_dir>/qac.jsonl)");
  eval->add_option("--predictions", predictions_path, "JSONL of {record_id, answer} to score with ROUGE-L");
  eval->add_option("--sample-size", sample_size, "Evaluate a seeded sample of this many records (0: all)");
  stats->add_option("--qac", qac_path, "QAC file (default: <out_dir>/qac.jsonl)");
  export_cmd->add_option("--qac", qac_path, "QAC file (default: <out_dir>/qac.jsonl)");

  CLI11_PARSE(app, argc, argv);
  Diagnostics::instance().set_verbose(g.verbose);

  try {
    if (*validate) {
      const RunConfig cfg = resolve_config(g);
      std::cout << to_json(cfg).dump(2) << "\n";
      return kExitOk;
    }
    if (*generate || *concepts || *stems) {
      const RunConfig cfg = resolve_config(g);
      RunOptions options;
      options.stop_after = *concepts ? Stage::concepts : *stems ? Stage::stems : Stage::qac;
      return report_run(run_pipeline(cfg, options), cfg);
    }
    if (*stats && !qac_path.empty() && g.config.empty()) {
      std::cout << render_stats(compute_stats(read_qac(qac_path)));
      return kExitOk;
    }

    const RunConfig cfg = resolve_config(g);
    const fs::path qac = qac_path.empty() ? cfg.out_dir / "qac.jsonl" : fs::path(qac_path);
    auto records = read_qac(qac);

    if (*export_cmd) {
      RunConfig out_cfg = cfg;
      const auto outputs = write_exports(records, out_cfg);
      for (const auto& [name, m] : outputs) std::cout << name << "  " << m.records << "  " << m.sha256 << "\n";
      return kExitOk;
    }
    if (*stats) {
      const auto s = compute_stats(records);
      fs::create_directories(cfg.out_dir);
      write_file_atomic(cfg.out_dir / "stats.json", to_json(s).dump(2) + "\n");
      write_file_atomic(cfg.out_dir / "stats.txt", render_stats(s));
      std::cout << render_stats(s);
      return kExitOk;
    }
    if (*eval) {
      if (sample_size > 0) records = sample_eval_split(records, sample_size, cfg.seed).first;
      const auto ingest = ingest_documents(cfg.corpus_root, cfg.include_globs);
      std::vector<Chunk> chunks;
      for (const auto& d : ingest.documents) {
        auto c = chunk_document(d, cfg.chunking.chunk_size, cfg.chunking.chunk_overlap);
        chunks.insert(chunks.end(), c.begin(), c.end());
      }
      const Providers providers = with_cache(make_providers(cfg), cfg.cache_dir / "providers");
      const auto index = build_chunk_index(chunks, *providers.embedder);
      const auto retrieval = evaluate_retrieval(records, index, *providers.embedder);
      RougeReport rouge;
      if (!predictions_path.empty()) {
        rouge = evaluate_answers(records, read_predictions(predictions_path));
      } else {
        rouge.missing_predictions = records.size();
      }
      fs::create_directories(cfg.out_dir);
      write_file_atomic(cfg.out_dir / "retrieval_report.json", to_json(retrieval).dump(2) + "\n");
      write_file_atomic(cfg.out_dir / "rouge_report.json", to_json(rouge).dump(2) + "\n");
      std::cout << to_json(retrieval).dump(2) << "\n" << to_json(rouge).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return e.transport() ? kExitProviderUnreachable : kExitErrorBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitErrorBudget;
  }
  return kExitOk;
}
