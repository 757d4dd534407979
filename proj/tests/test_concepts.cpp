#include <doctest.h>

#include <random>

#include "ragen/concepts.hpp"
#include "ragen/errors.hpp"
#include "ragen/kmeans.hpp"
#include "ragen/mock_providers.hpp"
#include "support.hpp"

using namespace ragen;

namespace {

using testing::TableEmbedder;

Embedding vec(std::initializer_list<double> v) {
  Embedding e(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) e[i++] = x;
  return e;
}

// Optimal 2-means inertia by enumerating every bipartition.
double best_two_partition(const Eigen::MatrixXd& pts) {
  const auto n = static_cast<unsigned>(pts.rows());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    double total = 0;
    for (int side = 0; side < 2; ++side) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(pts.cols());
      int count = 0;
      for (unsigned i = 0; i < n; ++i) {
        if (((mask >> i) & 1u) == static_cast<unsigned>(side)) {
          mean += pts.row(i);
          ++count;
        }
      }
      mean /= count;
      for (unsigned i = 0; i < n; ++i) {
        if (((mask >> i) & 1u) == static_cast<unsigned>(side)) total += (pts.row(i) - mean).squaredNorm();
      }
    }
    best = std::min(best, total);
  }
  return best;
}

}  // namespace

TEST_CASE("kmeans finds the optimal split of two separated blobs") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 7);
    Eigen::MatrixXd pts(n, 2);
    for (int i = 0; i < n; ++i) {
      const double cx = i % 2 ? 10.0 : -10.0;
      pts(i, 0) = cx + noise(rng);
      pts(i, 1) = noise(rng);
    }
    const auto r = kmeans(pts, 2, rng(), 100);
    CHECK(r.converged);
    CHECK(r.inertia == doctest::Approx(best_two_partition(pts)).epsilon(1e-12));
  }
}

TEST_CASE("kmeans never beats the brute-force optimum") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 8);
    Eigen::MatrixXd pts(n, 3);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < 3; ++d) pts(i, d) = u(rng);
    const auto r = kmeans(pts, 2, rng(), 100);
    CHECK(r.inertia >= best_two_partition(pts) - 1e-12);
  }
}

TEST_CASE("kmeans handles degenerate inputs") {
  Eigen::MatrixXd same = Eigen::MatrixXd::Ones(5, 3);
  const auto r = kmeans(same, 3, 1, 10);
  CHECK(r.k() == 3);
  CHECK(r.inertia == 0.0);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(std::count(r.assignments.begin(), r.assignments.end(), c) >= 1);
  }

  Eigen::MatrixXd one(1, 2);
  one << 3, 4;
  const auto single = kmeans(one, 1, 0, 5);
  CHECK(single.assignments == std::vector<std::size_t>{0});
  CHECK(single.centroids(0, 1) == 4.0);

  CHECK_THROWS_AS(kmeans(one, 0, 0, 5), PreconditionError);
  CHECK_THROWS_AS(kmeans(one, 2, 0, 5), PreconditionError);
  CHECK_THROWS_AS(kmeans(one, 1, 0, 0), PreconditionError);
}

TEST_CASE("kmeans works in single precision too") {
  Eigen::MatrixXf pts(4, 1);
  pts << 0.f, 0.1f, 5.f, 5.1f;
  const auto r = kmeans(pts, 2, 9, 20);
  CHECK(r.assignments[0] == r.assignments[1]);
  CHECK(r.assignments[2] == r.assignments[3]);
  CHECK(r.assignments[0] != r.assignments[2]);
}

TEST_CASE("concept list parsing") {
  CHECK(parse_concept_list(R"(["a", "b"])") == std::vector<std::string>{"a", "b"});
  CHECK(parse_concept_list(R"({"concepts": ["x"]})") == std::vector<std::string>{"x"});
  CHECK(parse_concept_list("```json\n[\"fenced\"]\n```") == std::vector<std::string>{"fenced"});
  CHECK_FALSE(parse_concept_list("not json").has_value());
  CHECK_FALSE(parse_concept_list(R"([1, 2])").has_value());
  CHECK_FALSE(parse_concept_list(R"({"other": []})").has_value());
}

TEST_CASE("extraction retries malformed replies, then gives up") {
  Chunk chunk{"d#c00000", "d", 0, "Some chunk text about filters.", {0, 5}};
  ExtractionParams params;
  params.max_concepts_per_chunk = 2;

  testing::ScriptedGenerator flaky({"oops", "{broken", R"([" Sand filter ", "sand  FILTER", "backwash", "turbidity"])"});
  const auto got = extract_chunk_concepts(chunk, flaky, PromptTemplates::defaults(), params);
  CHECK(flaky.prompts.size() == 3);
  REQUIRE(got.size() == 2);
  CHECK(got[0].text == "Sand filter");
  CHECK(got[0].normalized == "sand filter");
  CHECK(got[1].text == "backwash");
  CHECK(got[0].chunk_id == "d#c00000");
  CHECK(flaky.prompts[0].find("at most 2") != std::string::npos);

  testing::ScriptedGenerator broken({"nope"});
  CHECK_THROWS_AS(extract_chunk_concepts(chunk, broken, PromptTemplates::defaults(), params), ParseError);
  CHECK(broken.prompts.size() == 3);
}

TEST_CASE("dedup merges exact and near duplicates in first-occurrence order") {
  TableEmbedder emb({{"Alpha", vec({1, 0, 0})},
                     {"alpha twin", vec({0.99, 0.1, 0})},
                     {"Beta", vec({0, 1, 0})},
                     {"Gamma", vec({0, 0, 1})}});
  std::vector<ChunkConcept> in{make_chunk_concept("Alpha", "c0", "d"), make_chunk_concept(" ALPHA ", "c1", "d"),
                               make_chunk_concept("alpha twin", "c1", "d"), make_chunk_concept("Beta", "c2", "d"),
                               make_chunk_concept("Gamma", "c2", "d")};
  const auto out = dedup_concepts(in, emb, 0.95);
  REQUIRE(out.size() == 3);
  CHECK(out[0].text == "Alpha");
  CHECK(out[1].text == "Beta");
  CHECK(out[2].text == "Gamma");
  CHECK(emb.batches == 1);
  CHECK(dedup_concepts(in, emb, 1.0).size() == 4);
}

TEST_CASE("representative is the member nearest the centroid") {
  ConceptClustering cl;
  cl.assignments = {0, 0, 0, 1};
  cl.centroids = Eigen::MatrixXd(2, 2);
  cl.centroids << 1.0, 0.0, 0.0, 1.0;
  std::vector<ChunkConcept> cs{make_chunk_concept("far", "c0", "d"), make_chunk_concept("near", "c0", "d"),
                               make_chunk_concept("farther", "c1", "d"), make_chunk_concept("solo", "c1", "d")};
  std::vector<Embedding> es{vec({0.5, 0.5}), vec({0.9, 0.1}), vec({0.1, 0.9}), vec({5, 5})};
  const auto reps = select_representatives(cl, cs, es, "d", RepresentativeMode::centroid);
  REQUIRE(reps.size() == 2);
  CHECK(reps[0].label == "near");
  CHECK(reps[0].members.size() == 3);
  CHECK(reps[1].label == "solo");
  CHECK(reps[0].concept_id == "d#k000");
  CHECK_FALSE(reps[0].summarized);

  // Equidistant members: the smaller normalized text wins.
  std::vector<Embedding> tied{vec({0, 0}), vec({2, 0}), vec({1, 1}), vec({0, 1})};
  const auto t = select_representatives(cl, cs, tied, "d", RepresentativeMode::centroid);
  CHECK(t[0].label == "far");
}

TEST_CASE("summary representatives fall back to the centroid member") {
  ConceptClustering cl;
  cl.assignments = {0, 0};
  cl.centroids = Eigen::MatrixXd::Zero(1, 2);
  std::vector<ChunkConcept> cs{make_chunk_concept("alpha", "c0", "d"), make_chunk_concept("beta", "c0", "d")};
  std::vector<Embedding> es{vec({1, 0}), vec({2, 0})};
  const auto templates = PromptTemplates::defaults();

  testing::ScriptedGenerator good({R"({"label": "Greek letters"})"});
  auto reps = select_representatives(cl, cs, es, "d", RepresentativeMode::llm_summary, &good, &templates);
  CHECK(reps[0].label == "Greek letters");
  CHECK(reps[0].summarized);
  CHECK(good.prompts[0].find("- alpha\n- beta") != std::string::npos);

  testing::ScriptedGenerator wordy({R"({"label": "one two three four five six seven eight nine"})"});
  reps = select_representatives(cl, cs, es, "d", RepresentativeMode::llm_summary, &wordy, &templates);
  CHECK(reps[0].label == "alpha");
  CHECK_FALSE(reps[0].summarized);

  CHECK_THROWS_AS(select_representatives(cl, cs, es, "d", RepresentativeMode::llm_summary), PreconditionError);
}

TEST_CASE("default concept count") {
  CHECK(default_concept_count(1) == 1);
  CHECK(default_concept_count(2) == 2);
  CHECK(default_concept_count(4) == 3);
  CHECK(default_concept_count(30) == 5);
  CHECK(default_concept_count(100) == 10);
  CHECK(default_concept_count(1000) == 12);
}

TEST_CASE("fusion with mock providers is deterministic and labels are member texts") {
  auto providers = make_mock_providers(5);
  const auto doc = make_document("d.txt", "unused");
  std::vector<ChunkConcept> cs;
  for (const char* t : {"sand filter", "filter backwash", "chlorine residual", "chlorine contact time", "turbidity",
                        "coagulant dose", "aluminum sulfate", "flocculation basin"}) {
    cs.push_back(make_chunk_concept(t, "d.txt#c00000", "d.txt"));
  }
  FusionParams fp;
  fp.seed = 3;
  const auto a = fuse_concepts(doc, cs, *providers.embedder, fp);
  const auto b = fuse_concepts(doc, cs, *providers.embedder, fp);
  REQUIRE(a.concepts.size() == 3);
  for (std::size_t i = 0; i < a.concepts.size(); ++i) {
    CHECK(a.concepts[i].label == b.concepts[i].label);
    CHECK(a.concepts[i].concept_id == make_concept_id("d.txt", i));
    const auto& m = a.concepts[i].members;
    CHECK(std::any_of(m.begin(), m.end(), [&](const ChunkConcept& c) { return c.text == a.concepts[i].label; }));
  }
  CHECK(a.clustering.assignments == b.clustering.assignments);
  CHECK_THROWS_AS(fuse_concepts(doc, {}, *providers.embedder, fp), PreconditionError);

  fp.k = 50;
  CHECK(fuse_concepts(doc, cs, *providers.embedder, fp).concepts.size() == cs.size());
}
