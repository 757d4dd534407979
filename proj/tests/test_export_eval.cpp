#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "ragen/errors.hpp"
#include "ragen/evalkit.hpp"
#include "ragen/export.hpp"
#include "ragen/serialization.hpp"
#include "support.hpp"

using namespace ragen;

namespace {

QacRecord record(const std::string& id, BloomLevel bloom, std::vector<std::string> chunks) {
  QacRecord r;
  r.record_id = id;
  r.doc_id = "d.txt";
  r.combo_id = "d.txt#k000";
  r.question = "Question " + id + "?";
  r.answer = "Answer " + id + ".";
  r.reasoning = "because";
  r.bloom = bloom;
  r.combination_level = chunks.size() > 1 ? 2 : 1;
  r.concept_ids = {"d.txt#k000"};
  r.concept_labels = {"label"};
  r.evidence_chunk_ids = chunks;
  for (const auto& c : chunks) {
    Evidence e;
    e.concept_id = "d.txt#k000";
    e.chunk_id = c;
    e.evidence_id = e.concept_id + "@" + c;
    e.sentence_indices = {0};
    e.text = "Evidence from " + c + ".";
    e.retrieval_score = 0.5;
    e.window_score = 0.25;
    r.evidences.push_back(e);
  }
  r.contexts.fully_supportive = "golden " + id;
  r.contexts.partially_supportive = "gold";
  r.contexts.irrelevant = "irrelevant " + id;
  r.contexts.misleading = "misleading " + id;
  r.contexts.provenance.partial_rule = "leading_tokens";
  r.contexts.provenance.irrelevant_chunk_id = "d.txt#c00009";
  r.contexts.provenance.misleading_source = "generated";
  return r;
}

std::vector<QacRecord> sample_records() {
  return {record("a1", BloomLevel::Analyzing, {"d.txt#c00000"}),
          record("b2", BloomLevel::Analyzing, {"d.txt#c00000", "d.txt#c00001"}),
          record("c3", BloomLevel::Remembering, {"d.txt#c00000", "d.txt#c00001", "d.txt#c00002"})};
}

// Textbook LCS table over plain lower-case words.
std::size_t lcs_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

std::string join_words(const std::vector<std::string>& w) {
  std::string s;
  for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
  return s;
}

}  // namespace

TEST_CASE("recall and mrr examples") {
  RankedRetrieval r{"q", {"A", "B", "C", "D", "E"}, {"A", "D"}};
  CHECK(recall_at_k(r, 1) == 0.5);
  CHECK(recall_at_k(r, 3) == 0.5);
  CHECK(recall_at_k(r, 4) == 1.0);
  CHECK(mrr_at_10(r) == 1.0);
  CHECK(mrr_at_10({"q", {"X", "Y", "G"}, {"G"}}) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(mrr_at_10({"q", {"X", "G", "Y", "Z", "G2"}, {"G", "G2"}}) == 0.5);
  std::vector<std::string> eleven;
  for (int i = 0; i < 10; ++i) eleven.push_back("n" + std::to_string(i));
  eleven.push_back("G");
  CHECK(mrr_at_10({"q", eleven, {"G"}}) == 0.0);
  CHECK_THROWS_AS(recall_at_k(r, 0), PreconditionError);
  CHECK_THROWS_AS(recall_at_k({"q", {"A"}, {}}, 1), PreconditionError);
}

TEST_CASE("recall and mrr agree with brute force on random rankings") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("c" + std::to_string(i));
    std::shuffle(ids.begin(), ids.end(), rng);
    std::set<std::string> gold;
    gold.insert(ids[rng() % n]);
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 4 == 0) gold.insert(ids[i]);
    }
    if (rng() % 5 == 0) gold.insert("absent");
    const RankedRetrieval item{"q", ids, gold};
    double prev = 0.0;
    for (std::size_t k = 1; k <= 12; ++k) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < std::min(k, n); ++i) hits += gold.count(ids[i]);
      const double want = static_cast<double>(hits) / static_cast<double>(gold.size());
      const double got = recall_at_k(item, k);
      CHECK(std::abs(got - want) <= 1e-12);
      CHECK(got >= prev);
      prev = got;
    }
    double mrr = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(10, n); ++i) {
      if (gold.count(ids[i])) {
        mrr = 1.0 / static_cast<double>(i + 1);
        break;
      }
    }
    CHECK(std::abs(mrr_at_10(item) - mrr) <= 1e-12);
  }
}

TEST_CASE("aggregate retrieval averages per query") {
  const auto rep = aggregate_retrieval({{"a", {"A", "B"}, {"A"}}, {"b", {"A", "B"}, {"B"}}}, {1, 5});
  CHECK(rep.n_queries == 2);
  CHECK(rep.recall_at.at(1) == 0.5);
  CHECK(rep.recall_at.at(5) == 1.0);
  CHECK(rep.mrr_at_10 == 0.75);
}

TEST_CASE("retrieval evaluation against an index") {
  testing::TableEmbedder emb({{"Question a1?", Embedding::Unit(3, 0)}, {"Question b2?", Embedding::Unit(3, 2)}});
  ChunkIndex index;
  index.chunk_ids = {"d.txt#c00000", "d.txt#c00001", "d.txt#c00002"};
  index.vectors = Eigen::MatrixXd::Identity(3, 3);
  auto a = record("a1", BloomLevel::Applying, {"d.txt#c00000"});
  auto b = record("b2", BloomLevel::Applying, {"d.txt#c00001"});
  auto missing = record("m", BloomLevel::Applying, {"d.txt#c00077"});
  const auto rep = evaluate_retrieval({a, b, missing}, index, emb);
  CHECK(rep.n_queries == 2);
  CHECK(rep.skipped == 1);
  // a1 ranks its gold first. b2's query points at chunk 2; its gold ties with
  // chunk 0 at cosine 0 and loses on id, so it lands third.
  CHECK(rep.recall_at.at(1) == 0.5);
  CHECK(rep.recall_at.at(5) == 1.0);
  CHECK(std::abs(rep.mrr_at_10 - 2.0 / 3.0) <= 1e-12);
}

TEST_CASE("rouge-l examples") {
  const auto s = rouge_l_score("the cat", "the cat sat");
  CHECK(s.precision == 1.0);
  CHECK(std::abs(s.recall - 2.0 / 3.0) <= 1e-12);
  CHECK(std::abs(s.f1 - 0.8) <= 1e-12);
  CHECK(rouge_l("Grid storage smooths peaks.", "grid STORAGE smooths peaks.") == 1.0);
  CHECK(rouge_l("alpha beta", "gamma delta") == 0.0);
  CHECK(rouge_l("", "gamma") == 0.0);
  CHECK(rouge_l("", "") == 0.0);
}

TEST_CASE("rouge-l agrees with a brute-force LCS and is symmetric") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> x, y;
    for (std::size_t i = 0, n = rng() % 9; i < n; ++i) x.push_back(vocab[rng() % vocab.size()]);
    for (std::size_t i = 0, n = rng() % 9; i < n; ++i) y.push_back(vocab[rng() % vocab.size()]);
    const auto got = rouge_l_score(join_words(x), join_words(y));
    const double l = static_cast<double>(lcs_oracle(x, y));
    const double p = x.empty() ? 0.0 : l / x.size();
    const double r = y.empty() ? 0.0 : l / y.size();
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    CHECK(std::abs(got.precision - p) <= 1e-12);
    CHECK(std::abs(got.recall - r) <= 1e-12);
    CHECK(std::abs(got.f1 - f) <= 1e-12);
    CHECK(got.f1 >= 0.0);
    CHECK(got.f1 <= 1.0);
    CHECK(std::abs(rouge_l(join_words(y), join_words(x)) - got.f1) <= 1e-12);
    CHECK((got.f1 == 1.0) == (!x.empty() && x == y));
  }
}

TEST_CASE("answer evaluation counts missing predictions") {
  const auto rep = evaluate_answers(sample_records(), {{"a1", "Answer a1."}, {"b2", "nothing alike"}});
  CHECK(rep.n_pairs == 2);
  CHECK(rep.missing_predictions == 1);
  CHECK(rep.mean_f1 == doctest::Approx(0.5));
}

TEST_CASE("eval split sampling") {
  std::vector<QacRecord> many;
  for (int i = 0; i < 2726; ++i) many.push_back(record("r" + std::to_string(i), BloomLevel::Applying, {"d.txt#c00000"}));
  const auto [eval, rest] = sample_eval_split(many, 300, 17);
  CHECK(eval.size() == 300);
  CHECK(rest.size() == 2426);
  std::set<std::string> ids;
  for (const auto& r : eval) ids.insert(r.record_id);
  for (const auto& r : rest) ids.insert(r.record_id);
  CHECK(ids.size() == 2726);
  const auto again = sample_eval_split(many, 300, 17);
  for (std::size_t i = 0; i < 300; ++i) CHECK(again.first[i].record_id == eval[i].record_id);
  const auto other = sample_eval_split(many, 300, 18);
  bool differs = false;
  for (std::size_t i = 0; i < 300; ++i) differs |= other.first[i].record_id != eval[i].record_id;
  CHECK(differs);
  CHECK(sample_eval_split(many, 2726, 1).second.empty());
  CHECK(sample_eval_split(sample_records(), 10, 1).first.size() == 3);
}

TEST_CASE("triplets carry one positive and two ordered negatives") {
  auto recs = sample_records();
  recs[1].contexts.misleading.clear();
  const auto t = build_triplets(recs);
  REQUIRE(t.size() == 2);
  CHECK(t[0].query == "Question a1?");
  CHECK(t[0].positive == "golden a1");
  CHECK(t[0].negatives == std::vector<std::string>{"irrelevant a1", "misleading a1"});
  const auto j = to_json(t[1]);
  CHECK(j.at("pos").size() == 1);
  CHECK(j.at("neg").size() == 2);
  CHECK(j.at("meta").at("record_id") == "c3");
  const auto back = triplet_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.query == t[1].query);
  CHECK(back.negatives == t[1].negatives);
  CHECK(back.record_id == "c3");
}

TEST_CASE("sft inputs hold one or three neutral passages") {
  const auto recs = sample_records();
  const auto plain = build_sft(recs, false, 3);
  REQUIRE(plain.size() == 3);
  CHECK(plain[0].instruction == kSftInstruction);
  CHECK(plain[0].input == "Passage 1:\ngolden a1\n\nQuestion: Question a1?");
  CHECK(plain[0].output == "Answer a1.");

  const auto mixed = build_sft(recs, true, 3);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto passages = sft_passages(mixed[i].input);
    REQUIRE(passages.size() == 3);
    std::multiset<std::string> want{recs[i].contexts.fully_supportive, recs[i].contexts.irrelevant,
                                    recs[i].contexts.misleading};
    CHECK(std::multiset<std::string>(passages.begin(), passages.end()) == want);
    CHECK(mixed[i].input.find("irrelevant:") == std::string::npos);
    CHECK(mixed[i].with_distractors);
  }
  const auto again = build_sft(recs, true, 3);
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(again[i].input == mixed[i].input);
  const auto back = sft_from_json(nlohmann::json::parse(to_json(mixed[2]).dump()));
  CHECK(back.input == mixed[2].input);
  CHECK(back.record_id == "c3");
  CHECK(back.with_distractors);
}

TEST_CASE("files round trip and metadata points back at qac records") {
  testing::TempDir dir;
  const auto recs = sample_records();
  const auto m = write_qac(recs, dir / "qac.jsonl");
  CHECK(m.records == 3);
  CHECK(m.sha256.size() == 64);
  const auto back = read_qac(dir / "qac.jsonl");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == recs[i]);

  std::vector<nlohmann::ordered_json> rows;
  for (const auto& t : build_triplets(recs)) rows.push_back(to_json(t));
  for (const auto& s : build_sft(recs, true, 1)) rows.push_back(to_json(s));
  write_jsonl(dir / "mixed.jsonl", rows);
  std::set<std::string> ids;
  for (const auto& r : recs) ids.insert(r.record_id);
  const auto lines = read_jsonl(dir / "mixed.jsonl");
  CHECK(lines.size() == 6);
  for (const auto& j : lines) CHECK(ids.count(j.at("meta").at("record_id").get<std::string>()) == 1);

  CHECK(write_qac({}, dir / "empty.jsonl").records == 0);
  CHECK(read_qac(dir / "empty.jsonl").empty());
}

TEST_CASE("dataset statistics") {
  const auto empty = compute_stats({});
  CHECK(empty.total_records == 0);
  CHECK(empty.per_bloom_counts.size() == 6);
  CHECK(empty.multi_chunk_fraction == 0.0);

  const auto s = compute_stats(sample_records());
  CHECK(s.total_records == 3);
  CHECK(s.per_bloom_counts.at(BloomLevel::Analyzing) == 2);
  CHECK(s.per_bloom_counts.at(BloomLevel::Remembering) == 1);
  CHECK(s.per_bloom_counts.at(BloomLevel::Creating) == 0);
  CHECK(std::abs(s.multi_chunk_fraction - 2.0 / 3.0) <= 1e-12);
  CHECK(s.per_doc_counts.at("d.txt") == 3);
  std::size_t bloom_sum = 0, level_sum = 0;
  for (const auto& [k, v] : s.per_bloom_counts) bloom_sum += v;
  for (const auto& [k, v] : s.per_level_counts) level_sum += v;
  CHECK(bloom_sum == 3);
  CHECK(level_sum == 3);

  const auto text = render_stats(s);
  std::size_t pos = 0;
  for (auto level : kBloomLevels) {
    const auto at = text.find(std::string(to_string(level)), pos);
    REQUIRE(at != std::string::npos);
    pos = at;
  }
}

TEST_CASE("recipe defaults") {
  const auto j = to_json(TrainingRecipe{});
  CHECK(j.at("objective") == "InfoNCE");
  CHECK(j.at("temperature_tau").get<double>() == 0.02);
  CHECK(j.at("learning_rate").get<double>() == 1e-5);
  CHECK(j.at("epochs") == 3);
  CHECK(j.at("negatives_per_sample") == 2);
}
