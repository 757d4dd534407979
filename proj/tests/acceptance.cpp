// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ragen/config.hpp"
#include "ragen/corpus.hpp"
#include "ragen/evalkit.hpp"
#include "ragen/export.hpp"
#include "ragen/kmeans.hpp"
#include "ragen/pipeline.hpp"
#include "ragen/qacgen.hpp"
#include "ragen/serialization.hpp"
#include "ragen/text.hpp"
#include "support.hpp"

using namespace ragen;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Thrown by check(); the message becomes the FAIL detail.
struct Failure {
  std::string what;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

struct Criterion {
  std::string id;
  double max_seconds;
  std::function<std::string()> body;  // returns a short detail on success
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << v;
  return os.str();
}

std::vector<std::string> words(std::size_t n, std::mt19937_64& rng) {
  static const char* vocab[] = {"river", "stone", "pump", "valve", "grid", "soil", "heat", "frame"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(vocab[rng() % 8]);
  return out;
}

// ---- AC1 -----------------------------------------------------------------

void check_spans(std::size_t t, std::size_t size, std::size_t overlap, std::mt19937_64& rng) {
  std::string text;
  for (const auto& w : words(t, rng)) text += w + " ";
  const auto doc = make_document("d.txt", text);
  check(count_tokens(doc.text) == t, "token count of generated document");
  const auto chunks = chunk_document(doc, size, overlap);
  const std::size_t stride = size - overlap;
  const std::size_t want = t <= size ? 1 : 1 + (t - size + stride - 1) / stride;
  check(chunks.size() == want, "chunk count for T=" + std::to_string(t) + " size=" + std::to_string(size) +
                                   " overlap=" + std::to_string(overlap));
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& s = chunks[i].token_span;
    check(s.start == i * stride, "chunk start");
    check(s.end == std::min(s.start + size, t), "chunk end");
    check(count_tokens(chunks[i].text) == s.size(), "chunk text token count");
    check(chunks[i].chunk_id == make_chunk_id("d.txt", i), "chunk id");
  }
  check(chunks.back().token_span.end == t, "coverage of the last token");
}

std::string ac1() {
  std::mt19937_64 rng(1);
  {
    std::string text;
    for (const auto& w : words(2000, rng)) text += w + " ";
    const auto chunks = chunk_document(make_document("d.txt", text), 1024, 200);
    check(chunks.size() == 3, "2000-token document gives 3 chunks");
    check(chunks[0].token_span == TokenSpan{0, 1024}, "span 0");
    check(chunks[1].token_span == TokenSpan{824, 1848}, "span 1");
    check(chunks[2].token_span == TokenSpan{1648, 2000}, "span 2");
  }
  std::size_t docs = 0;
  for (int i = 0; i < 40; ++i, ++docs) check_spans(1 + rng() % 5000, 1024, 200, rng);
  for (int pair = 0; pair < 50; ++pair) {
    const std::size_t size = 1 + rng() % 1500;
    const std::size_t overlap = rng() % size;
    for (int i = 0; i < 4; ++i, ++docs) check_spans(1 + rng() % 5000, size, overlap, rng);
  }
  return std::to_string(docs) + " random documents";
}

// ---- AC2 -----------------------------------------------------------------

std::string ac2() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 1 + rng() % 50;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(5, n);
    const Eigen::Index dim = 2 + static_cast<Eigen::Index>(rng() % 4);
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), dim);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      for (Eigen::Index d = 0; d < dim; ++d) pts(i, d) = normal(rng) + 4.0 * static_cast<double>(i % k);
    }
    const auto seed = rng();
    const auto r = kmeans(pts, k, seed, 1000);
    check(r.converged, "converged within 1000 iterations");
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const auto a = static_cast<Eigen::Index>(r.assignments[static_cast<std::size_t>(i)]);
      const double own = (pts.row(i) - r.centroids.row(a)).squaredNorm();
      for (Eigen::Index c = 0; c < r.centroids.rows(); ++c) {
        check(own <= (pts.row(i) - r.centroids.row(c)).squaredNorm() + 1e-12, "point nearest its centroid");
      }
    }
    for (Eigen::Index c = 0; c < r.centroids.rows(); ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(dim);
      std::size_t members = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (r.assignments[i] == static_cast<std::size_t>(c)) {
          sum += pts.row(static_cast<Eigen::Index>(i));
          ++members;
        }
      }
      check(members > 0, "no empty cluster");
      check(((sum / static_cast<double>(members)) - r.centroids.row(c)).cwiseAbs().maxCoeff() < 1e-9,
            "centroid equals member mean");
    }
    for (std::size_t t = 1; t < r.inertia_history.size(); ++t) {
      check(r.inertia_history[t] <= r.inertia_history[t - 1] + 1e-9, "inertia non-increasing");
    }
    for (int rerun = 0; rerun < 3; ++rerun) {
      const auto again = kmeans(pts, k, seed, 1000);
      check(again.assignments == r.assignments && again.centroids == r.centroids &&
                again.inertia_history == r.inertia_history,
            "identical rerun");
    }
  }
  return "200 instances";
}

// ---- AC3 -----------------------------------------------------------------

std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::string ac3() {
  std::mt19937_64 rng(3);
  const std::size_t caps[] = {1, 50, ComboCaps::kUnlimited};
  std::size_t cases = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t k = 1 + rng() % 30;
    const std::size_t l = 1 + rng() % 3;
    const std::size_t cap = caps[rng() % 3];
    std::vector<QuestionStem> stems(k);
    for (std::size_t i = 0; i < k; ++i) stems[i].stem_id = make_concept_id("d.txt", k - 1 - i);
    ComboCaps cc;
    cc.default_cap = cap;
    const auto seed = rng();
    const auto all = enumerate_combinations(stems, l, cc, seed);
    std::vector<StemCombo> at_level;
    std::copy_if(all.begin(), all.end(), std::back_inserter(at_level), [&](const StemCombo& c) { return c.level == l; });
    const std::uint64_t want = l == 1 ? k : std::min<std::uint64_t>(cap, choose(k, l));
    check(at_level.size() == want, "count for K=" + std::to_string(k) + " l=" + std::to_string(l));
    std::set<std::set<std::string>> sets;
    for (const auto& c : all) {
      const auto ids = c.stem_ids();
      check(sets.insert({ids.begin(), ids.end()}).second, "duplicate stem set");
      check(ids.size() == c.level, "level equals stem count");
    }
    const auto again = enumerate_combinations(stems, l, cc, seed);
    check(again.size() == all.size(), "deterministic size");
    for (std::size_t i = 0; i < all.size(); ++i) check(again[i].combo_id == all[i].combo_id, "deterministic order");
    ++cases;
  }
  return std::to_string(cases) + " random cases";
}

// ---- shared mock runs ------------------------------------------------------

struct MockRun {
  testing::TempDir dir;
  RunConfig cfg;
  RunResult result;
};

std::unique_ptr<MockRun> mock_run(std::size_t workers) {
  auto run = std::make_unique<MockRun>();
  run->cfg = testing::copy_corpus6(run->dir.path());
  run->cfg.workers = workers;
  run->cfg.seed = 7;
  run->cfg.providers.mock = true;
  run->result = run_pipeline(run->cfg);
  return run;
}

std::unique_ptr<MockRun> g_reference;

MockRun& reference_run() {
  if (!g_reference) g_reference = mock_run(1);
  return *g_reference;
}

const char* kCompared[] = {"qac.jsonl", "triplets.jsonl", "sft.jsonl", "sft_distractor.jsonl"};

void check_schema(const std::string& line) {
  const auto j = json::parse(line);
  const auto r = record_from_json(j);
  check(to_json(r).dump() == line, "qac line is canonical");
  check(r.record_id.size() == 16, "record_id shape");
  check(!r.doc_id.empty() && !r.combo_id.empty(), "ids present");
  check(!trim(r.question).empty() && !trim(r.answer).empty(), "question and answer present");
  check(r.combination_level == r.concept_ids.size() && r.concept_ids.size() == r.concept_labels.size(),
        "concepts match level");
  check(!r.evidences.empty() && !r.evidence_chunk_ids.empty(), "evidence present");
  const auto& c = r.contexts;
  check(!c.fully_supportive.empty() && !c.partially_supportive.empty() && !c.irrelevant.empty() &&
            !c.misleading.empty(),
        "four context variants");
}

std::string ac4() {
  auto& ref = reference_run();
  check(ref.result.exit_code == kExitOk, "reference exit code");
  check(!ref.result.records.empty(), "reference produced records");
  std::map<std::string, std::string> want;
  for (const char* name : kCompared) want[name] = testing::read_text(ref.cfg.out_dir / name);

  std::size_t runs = 1;
  for (std::size_t workers : {1, 1, 4, 4, 4}) {
    const auto other = mock_run(workers);
    check(other->result.exit_code == kExitOk, "exit code");
    for (const char* name : kCompared) {
      check(testing::read_text(other->cfg.out_dir / name) == want[name],
            std::string(name) + " differs with workers=" + std::to_string(workers));
    }
    ++runs;
  }

  std::istringstream qac(want["qac.jsonl"]);
  std::size_t records = 0;
  std::map<std::string, QacRecord> by_id;
  for (std::string line; std::getline(qac, line); ++records) {
    check_schema(line);
    const auto r = record_from_json(json::parse(line));
    by_id[r.record_id] = r;
  }
  check(records == ref.result.records.size(), "record count");

  std::istringstream trip(want["triplets.jsonl"]);
  std::size_t triplets = 0;
  for (std::string line; std::getline(trip, line); ++triplets) {
    const auto t = triplet_from_json(json::parse(line));
    check(t.negatives.size() == 2, "two negatives");
    const auto& r = by_id.at(t.record_id);
    check(t.negatives[0] == r.contexts.irrelevant && t.negatives[1] == r.contexts.misleading,
          "negatives ordered [irrelevant, misleading]");
    check(t.positive == r.contexts.fully_supportive, "positive is the supportive context");
  }
  check(triplets == records, "one triplet per record");

  std::istringstream sft(want["sft_distractor.jsonl"]);
  std::size_t sft_rows = 0;
  for (std::string line; std::getline(sft, line); ++sft_rows) {
    const auto e = sft_from_json(json::parse(line));
    check(sft_passages(e.input).size() == 3, "three passages");
  }
  check(sft_rows == records, "one distractor example per record");
  return std::to_string(runs) + " runs, " + std::to_string(records) + " records";
}

// ---- AC5 -----------------------------------------------------------------

const char* kFiller[] = {
    "Harbor cranes lift containers from ships onto waiting trucks.",
    "Orchard growers prune apple trees in late winter.",
    "Library archivists scan fragile maps at high resolution.",
    "Marathon runners taper their mileage before race day.",
    "Bakers proof sourdough slowly in cool rooms.",
    "Glaciers carve valleys as they creep downhill.",
    "Choir directors balance voices across sections.",
    "Beekeepers inspect hives for queen cells in spring.",
    "Ferry pilots watch fog banks near the channel.",
    "Potters trim bowls on the wheel once the clay stiffens.",
    "Cartographers mark contour lines at fixed intervals.",
    "Tailors chalk seam allowances before cutting wool.",
    "Astronomers log variable stars on clear nights.",
    "Farriers shape horseshoes while the iron glows.",
    "Librarians weed outdated atlases from the stacks.",
    "Vintners taste grapes to judge sugar before harvest.",
    "Climbers clip ropes into bolts along the route.",
    "Typesetters kern headlines by eye.",
    "Shepherds move flocks to summer pasture in June.",
    "Cellists rosin their bows before rehearsal.",
    "Gardeners mulch tomato beds to hold moisture.",
    "Sailors reef the mainsail when gusts build.",
    "Jewelers polish opals with fine cerium paste.",
    "Foresters count tree rings to date old stands.",
    "Chefs rest roasted lamb before carving.",
    "Surveyors level tripods on soft ground with care.",
    "Printers ink copper plates for each etching.",
    "Cyclists check tire pressure before long climbs.",
    "Weavers warp the loom with linen thread.",
    "Divers equalize pressure slowly while descending.",
    "Masons point brick joints with lime mortar.",
    "Translators keep glossaries for recurring terms.",
    "Ranchers mend fences after spring floods.",
    "Hikers filter stream water at camp.",
    "Violin makers season spruce for many years.",
    "Archers wax bowstrings to limit fraying.",
    "Fishers mend nets on the quay at dawn.",
    "Brewers monitor wort gravity during fermentation.",
    "Botanists press leaves between blotting sheets.",
    "Skaters sharpen blades before competitions.",
    "Drummers tune heads in small even turns.",
    "Glassblowers anneal vases in a warm kiln.",
    "Miners shore tunnels with timber props.",
    "Pilots file flight plans before departure.",
};

const char* kZephyrite[] = {
    "Zephyrite alloy resists corrosion in salt spray. Engineers choose zephyrite alloy for offshore brackets. "
    "Zephyrite alloy castings need slow cooling.",
    "Zephyrite alloy loses strength above six hundred degrees. Welders preheat zephyrite alloy plates slowly. "
    "Zephyrite alloy scrap is recycled separately.",
};

// Zephyrite text opens chunk 0 and sits wholly inside chunk 7 of an
// eight-chunk document; filler sentences appear once each.
std::string zephyrite_document(std::size_t size) {
  std::string doc = kZephyrite[0];
  bool placed = false;
  for (const char* f : kFiller) {
    const std::size_t n = count_tokens(doc);
    if (!placed && n >= 7 * size) {
      doc += std::string(" ") + kZephyrite[1];
      placed = true;
      continue;
    }
    if (n + count_tokens(f) > 8 * size) break;
    doc += std::string(" ") + f;
  }
  if (!placed && count_tokens(doc) >= 7 * size && count_tokens(doc) + count_tokens(kZephyrite[1]) <= 8 * size) {
    doc += std::string(" ") + kZephyrite[1];
  }
  return doc + "\n";
}

std::string ac5() {
  testing::TempDir dir;
  const std::size_t size = 50;
  testing::write_text(dir / "docs" / "zephyrite.txt", zephyrite_document(size));
  RunConfig cfg;
  cfg.corpus_root = dir / "docs";
  cfg.out_dir = dir / "out";
  cfg.cache_dir = dir / "cache";
  cfg.seed = 7;
  cfg.workers = 1;
  cfg.providers.mock = true;
  cfg.chunking.chunk_size = size;
  cfg.chunking.chunk_overlap = 0;
  cfg.evidence.m = 8;
  cfg.evidence.n = 3;
  cfg.evidence.min_window_score = 0.2;

  const auto doc = ingest_documents(cfg.corpus_root, {"zephyrite.txt"}).documents.at(0);
  const auto chunks = chunk_document(doc, size, 0);
  check(chunks.size() == 8, "fixture has 8 chunks");
  for (const auto& c : chunks) {
    const bool has = fold_case(c.text).find("zephyrite") != std::string::npos;
    check(has == (c.ordinal == 0 || c.ordinal == 7), "zephyrite appears only in chunks 0 and 7");
  }

  const auto r = run_pipeline(cfg);
  check(r.exit_code == kExitOk, "run exit code");
  const std::set<std::string> target{make_chunk_id("zephyrite.txt", 0), make_chunk_id("zephyrite.txt", 7)};
  std::size_t multi = 0, spanning = 0;
  for (const auto& rec : r.records) {
    if (rec.evidence_chunk_ids.size() >= 2) ++multi;
    const std::set<std::string> ids(rec.evidence_chunk_ids.begin(), rec.evidence_chunk_ids.end());
    if (std::includes(ids.begin(), ids.end(), target.begin(), target.end())) ++spanning;
  }
  check(spanning >= 1, "a record cites both chunk 0 and chunk 7 (multi-chunk records: " + std::to_string(multi) + ")");
  return std::to_string(spanning) + " records span chunks 0 and 7";
}

// ---- AC6 -----------------------------------------------------------------

const char* kExtraDoc =
    "Heat pumps move heat instead of making it. A compressor raises the refrigerant pressure so the gas condenses "
    "indoors and releases heat. In cold weather the outdoor coil can frost over, so the unit runs short defrost "
    "cycles. Ground source systems avoid most frost because soil temperature stays steady through the year. "
    "Installers size the unit from a heat loss calculation rather than from the old furnace rating. An oversized "
    "heat pump cycles often, which wears the compressor and leaves rooms clammy in summer. Variable speed "
    "compressors reduce cycling by running slowly for long periods. Ducts that were sized for a furnace may be "
    "too small for the lower supply temperature of a heat pump, so airflow checks matter during retrofits. "
    "Refrigerant leaks reduce capacity and efficiency and should be found with pressure tests. The seasonal "
    "performance factor tells owners how much heat they get per unit of electricity over a whole year.";

std::string ac6() {
  testing::TempDir dir;
  auto cfg = testing::copy_corpus6(dir.path());
  cfg.workers = 2;
  const auto first = run_pipeline(cfg);
  check(first.exit_code == kExitOk, "first run");

  const auto unchanged = run_pipeline(cfg);
  check(unchanged.calls.provider_calls() == 0, "unchanged rerun makes no provider calls");

  testing::write_text(cfg.corpus_root / "heat_pumps.txt", kExtraDoc);
  const auto added = run_pipeline(cfg);
  check(added.exit_code == kExitOk, "run after adding a document");
  std::uint64_t new_doc_calls = 0;
  for (const auto& d : added.documents) {
    if (d.doc_id == "heat_pumps.txt") {
      check(d.status == "processed", "new document processed");
      new_doc_calls = d.calls.provider_calls();
    } else {
      check(d.status == "cached", d.doc_id + " reused from cache");
      check(d.calls.provider_calls() == 0, d.doc_id + " made provider calls");
    }
  }
  check(new_doc_calls > 0, "new document made provider calls");
  check(added.calls.provider_calls() == new_doc_calls, "all calls belong to the new document");

  const fs::path prompts = dir / "prompts";
  testing::write_text(prompts / "generate_qa.txt",
                      PromptTemplates::defaults().generate_qa + "\nKeep each answer under four sentences.\n");
  cfg.prompt_dir = prompts;
  auto providers = make_providers(cfg);
  auto counting = std::make_shared<testing::TaskCountingGenerator>(providers.generator);
  providers.generator = counting;
  RunOptions opts;
  opts.providers = providers;
  const auto retemplated = run_pipeline(cfg, opts);
  check(retemplated.exit_code == kExitOk, "run after template change");
  std::size_t combos = 0;
  for (const auto& d : retemplated.documents) {
    check(d.stages.at("concepts") == "cached" && d.stages.at("stems") == "cached", d.doc_id + " upstream cached");
    check(d.stages.at("qac") == "computed", d.doc_id + " qa stage recomputed");
    combos += d.combos;
  }
  const auto counts = counting->counts();
  check(counts.count("extract_concepts") == 0 && counts.count("summarize_cluster") == 0,
        "no upstream generation calls");
  check(counts.count("generate_qa") && counts.at("generate_qa") == combos,
        "one generation call per combo (" + std::to_string(combos) + ")");
  return "new document: " + std::to_string(new_doc_calls) + " calls; template change: " + std::to_string(combos) +
         " qa calls, 0 upstream";
}

// ---- AC7 -----------------------------------------------------------------

std::size_t lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

std::string ac7() {
  const double tol = 1e-12;
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("c" + std::to_string(i));
    std::shuffle(ids.begin(), ids.end(), rng);
    std::set<std::string> gold{ids[rng() % n]};
    for (const auto& id : ids) {
      if (rng() % 3 == 0) gold.insert(id);
    }
    const RankedRetrieval item{"q", ids, gold};
    double prev = 0;
    for (std::size_t k : {1, 5, 10}) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < std::min(k, n); ++i) hits += gold.count(ids[i]);
      const double got = recall_at_k(item, k);
      check(std::abs(got - static_cast<double>(hits) / gold.size()) <= tol, "recall matches brute force");
      check(got >= prev, "recall monotone in k");
      prev = got;
    }
    double rr = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(n, 10); ++i) {
      if (gold.count(ids[i])) {
        rr = 1.0 / static_cast<double>(i + 1);
        break;
      }
    }
    check(std::abs(mrr_at_10(item) - rr) <= tol, "mrr matches brute force");
  }
  const std::vector<std::string> vocab{"the", "cat", "sat", "on", "mat", "dog"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> a, b;
    for (std::size_t i = 0, n = 1 + rng() % 10; i < n; ++i) a.push_back(vocab[rng() % vocab.size()]);
    for (std::size_t i = 0, n = 1 + rng() % 10; i < n; ++i) b.push_back(vocab[rng() % vocab.size()]);
    std::string sa, sb;
    for (const auto& w : a) sa += w + " ";
    for (const auto& w : b) sb += w + " ";
    const double l = static_cast<double>(lcs(a, b));
    const double p = l / a.size(), r = l / b.size();
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    check(std::abs(rouge_l(sa, sb) - f) <= tol, "rouge-l matches brute-force LCS");
  }
  check(std::abs(rouge_l("the cat", "the cat sat") - 0.8) <= tol, "rouge-l example");
  return "500 rankings, 200 string pairs";
}

// ---- AC8 -----------------------------------------------------------------

std::string ac8() {
  auto& ref = reference_run();
  std::map<std::string, std::string> chunk_text;
  for (const auto& d : ingest_documents(ref.cfg.corpus_root, ref.cfg.include_globs).documents) {
    for (const auto& c : chunk_document(d, ref.cfg.chunking.chunk_size, ref.cfg.chunking.chunk_overlap)) {
      chunk_text[c.chunk_id] = c.text;
    }
  }
  const auto records = read_qac(ref.cfg.out_dir / "qac.jsonl");
  check(!records.empty(), "records to audit");
  for (const auto& r : records) {
    const auto& ctx = r.contexts;
    std::string joined;
    for (const auto& e : r.evidences) {
      check(chunk_text.count(e.chunk_id) && chunk_text.at(e.chunk_id).find(e.text) != std::string::npos,
            r.record_id + ": evidence is verbatim chunk text");
      check(ctx.fully_supportive.find(e.text) != std::string::npos, r.record_id + ": evidence in supportive context");
      joined += (joined.empty() ? "" : std::string(kEvidenceJoiner)) + e.text;
    }
    check(ctx.fully_supportive == joined, r.record_id + ": supportive context is the cited evidence");
    check(ctx.partially_supportive.size() < ctx.fully_supportive.size() &&
              ctx.fully_supportive.find(ctx.partially_supportive) != std::string::npos,
          r.record_id + ": partial context is a strict subset");
    const auto& irr = ctx.provenance.irrelevant_chunk_id;
    check(std::find(r.evidence_chunk_ids.begin(), r.evidence_chunk_ids.end(), irr) == r.evidence_chunk_ids.end(),
          r.record_id + ": irrelevant source outside evidence");
    check(chunk_text.count(irr) && chunk_text.at(irr).find(ctx.irrelevant) != std::string::npos,
          r.record_id + ": irrelevant text comes from its source chunk");
    if (ctx.provenance.misleading_source == "chunk") {
      const auto& mis = ctx.provenance.misleading_chunk_id;
      check(std::find(r.evidence_chunk_ids.begin(), r.evidence_chunk_ids.end(), mis) == r.evidence_chunk_ids.end(),
            r.record_id + ": misleading source outside evidence");
    }
  }
  return std::to_string(records.size()) + " records audited";
}

// ---- AC9 -----------------------------------------------------------------

std::string ac9() {
  auto& ref = reference_run();
  const auto records = read_qac(ref.cfg.out_dir / "qac.jsonl");
  const auto stats = json::parse(testing::read_text(ref.cfg.out_dir / "stats.json"));
  const auto s = compute_stats(records);
  check(stats == json::parse(to_json(s).dump()), "stats.json matches the records");
  std::size_t bloom = 0, level = 0;
  for (const auto& [k, v] : s.per_bloom_counts) bloom += v;
  for (const auto& [k, v] : s.per_level_counts) level += v;
  check(s.total_records == records.size(), "total");
  check(bloom == s.total_records && level == s.total_records, "conservation");
  check(s.multi_chunk_fraction >= 0.0 && s.multi_chunk_fraction <= 1.0, "fraction in [0,1]");
  const auto text = testing::read_text(ref.cfg.out_dir / "stats.txt");
  std::size_t pos = 0;
  for (auto lvl : kBloomLevels) {
    const auto at = text.find(std::string(to_string(lvl)), pos);
    check(at != std::string::npos, std::string(to_string(lvl)) + " in taxonomy order");
    pos = at + 1;
  }
  return std::to_string(s.total_records) + " records, multi-chunk " + fmt(s.multi_chunk_fraction);
}

// ---- AC10 ----------------------------------------------------------------

std::string ac10() {
  testing::TempDir dir;
  testing::write_text(dir / "docs" / "a.txt", kExtraDoc);
  const auto cfg = config_from_json({{"corpus_root", "docs"}, {"providers", {{"mock", true}}}}, dir.path());
  const auto r = run_pipeline(cfg);
  check(r.exit_code == kExitOk, "default run");
  const auto recipe = json::parse(testing::read_text(cfg.out_dir / "recipe.json"));
  check(recipe.at("temperature_tau").get<double>() == 0.02, "tau");
  check(recipe.at("learning_rate").get<double>() == 1e-5, "learning rate");
  check(recipe.at("epochs").get<int>() == 3, "epochs");
  check(recipe.at("negatives_per_sample").get<int>() == 2, "negatives");
  return recipe.dump();
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"AC1", 5, ac1},  {"AC2", 10, ac2}, {"AC3", 5, ac3},  {"AC4", 60, ac4},  {"AC5", 30, ac5},
      {"AC6", 60, ac6}, {"AC7", 10, ac7}, {"AC8", 10, ac8}, {"AC9", 10, ac9}, {"AC10", 10, ac10},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.body();
    } catch (const Failure& f) {
      ok = false;
      detail = f.what;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && secs > c.max_seconds) {
      ok = false;
      detail += "; took longer than " + fmt(c.max_seconds) + " s";
    }
    failures += !ok;
    std::cout << c.id << " " << (ok ? "PASS" : "FAIL") << " (" << fmt(secs) << " s) " << detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
