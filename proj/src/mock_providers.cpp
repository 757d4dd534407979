#include "ragen/mock_providers.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "ragen/bloom.hpp"
#include "ragen/corpus.hpp"
#include "ragen/digest.hpp"
#include "ragen/prompts.hpp"
#include "ragen/text.hpp"

using nlohmann::json;

namespace ragen {
namespace {

std::string between(const std::string& s, std::string_view open, std::string_view close) {
  const auto b = s.find(open);
  if (b == std::string::npos) return {};
  const auto start = b + open.size();
  const auto e = s.rfind(close);
  if (e == std::string::npos || e < start) return s.substr(start);
  return s.substr(start, e - start);
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::size_t b = 0;
  while (b <= s.size()) {
    auto e = s.find('\n', b);
    if (e == std::string::npos) e = s.size();
    out.push_back(s.substr(b, e - b));
    b = e + 1;
  }
  return out;
}

int match_int(const std::string& s, const std::regex& re, int fallback) {
  std::smatch m;
  if (std::regex_search(s, m, re)) return std::stoi(m[1].str());
  return fallback;
}

std::string line_value(const std::string& prompt, std::string_view key) {
  for (const auto& line : lines_of(prompt)) {
    if (line.rfind(key, 0) == 0) return trim(std::string_view(line).substr(key.size()));
  }
  return {};
}

std::string first_sentence(const std::string& text) {
  const auto sentences = split_sentences(text);
  return sentences.empty() ? text : sentences.front().text;
}

struct PromptStem {
  std::string label;
  std::vector<std::pair<std::string, std::string>> evidences;  // id, text
};

std::vector<PromptStem> parse_stems(const std::string& block) {
  static const std::regex kStem(R"(^Stem \d+ concept: (.*)$)");
  static const std::regex kEvidence(R"(^\[(E\d+)\] (.*)$)");
  std::vector<PromptStem> stems;
  for (const auto& line : lines_of(block)) {
    std::smatch m;
    if (std::regex_match(line, m, kStem)) {
      stems.push_back({m[1].str(), {}});
    } else if (std::regex_match(line, m, kEvidence)) {
      if (stems.empty()) stems.push_back({"", {}});
      stems.back().evidences.emplace_back(m[1].str(), m[2].str());
    }
  }
  return stems;
}

std::string question_for(BloomLevel level, const std::string& topic) {
  switch (level) {
    case BloomLevel::Remembering: return "What does the document state about " + topic + "?";
    case BloomLevel::Understanding: return "How does the document explain the role of " + topic + "?";
    case BloomLevel::Applying: return "How could the guidance on " + topic + " be applied in a new setting?";
    case BloomLevel::Analyzing: return "Which factors does the document link to " + topic + ", and how do they interact?";
    case BloomLevel::Evaluating: return "How well does the approach to " + topic + " described in the document meet its goals?";
    case BloomLevel::Creating: return "What plan could combine the document's points on " + topic + " into one coherent approach?";
  }
  return {};
}

}  // namespace

MockGenerator::MockGenerator(std::uint64_t seed, std::shared_ptr<ProviderStats> stats, MockGeneratorOptions options)
    : seed_(seed), stats_(std::move(stats)), options_(options) {}

std::string MockGenerator::id() const {
  return "mock-generator/seed=" + std::to_string(seed_) +
         (options_.reject_disjoint_combos ? "/reject-disjoint" : "");
}

std::string MockGenerator::generate(const GenerationRequest& req) {
  validate(req);
  if (stats_) stats_->record_generate();
  const auto digest = Hasher{}.add(static_cast<std::int64_t>(seed_)).add(req.prompt).u64();
  const std::string_view task = prompt_task(req.prompt);
  if (task == "extract_concepts") return extract_concepts(req.prompt, digest);
  if (task == "summarize_cluster") return summarize_cluster(req.prompt);
  if (task == "generate_qa") return generate_qa(req.prompt, digest);
  if (task == "misleading_context") return misleading_context(req.prompt, digest);
  return json{{"text", "mock-" + std::to_string(digest % 1000000)}}.dump();
}

std::string MockGenerator::extract_concepts(const std::string& prompt, std::uint64_t digest) const {
  static const std::regex kMax(R"(at most (\d+) concepts)");
  const int max_concepts = std::max(1, match_int(prompt, kMax, 8));
  const std::string text = between(prompt, "<document>\n", "\n</document>");

  struct Candidate {
    std::string surface;
    int score = 0;
    std::size_t first = 0;
    bool bigram = false;
  };
  std::unordered_map<std::string, Candidate> candidates;
  auto bump = [&](const std::string& key, const std::string& surface, int weight, std::size_t pos, bool bigram) {
    auto [it, inserted] = candidates.try_emplace(key, Candidate{surface, 0, pos, bigram});
    it->second.score += weight;
  };

  const auto tokens = tokenize(text);
  std::string prev_key;
  std::string prev_surface;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string surface = text.substr(tokens[i].begin, tokens[i].end - tokens[i].begin);
    const std::string key = fold_case(surface);
    if (!is_word(key) || is_stopword(key) || key.size() < 3) {
      prev_key.clear();
      continue;
    }
    if (key.size() >= 4) bump(key, surface, 1, i, false);
    if (!prev_key.empty()) bump(prev_key + " " + key, prev_surface + " " + surface, 3, i, true);
    prev_key = key;
    prev_surface = surface;
  }

  std::vector<std::pair<std::string, Candidate>> ranked(candidates.begin(), candidates.end());
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.second.score != b.second.score) return a.second.score > b.second.score;
    const auto ha = Hasher{}.add(static_cast<std::int64_t>(seed_)).add(a.first).u64();
    const auto hb = Hasher{}.add(static_cast<std::int64_t>(seed_)).add(b.first).u64();
    if (ha != hb) return ha < hb;
    return a.first < b.first;
  });

  const std::size_t want = std::min<std::size_t>(max_concepts, 3 + digest % 3);
  std::vector<std::string> chosen_keys;
  json out = json::array();
  for (const auto& [key, cand] : ranked) {
    if (out.size() >= want) break;
    const bool covered = !cand.bigram && std::any_of(chosen_keys.begin(), chosen_keys.end(), [&](const std::string& k) {
      return k.find(' ') != std::string::npos &&
             (k.rfind(key + " ", 0) == 0 || (k.size() > key.size() && k.compare(k.size() - key.size() - 1, std::string::npos, " " + key) == 0));
    });
    if (covered) continue;
    chosen_keys.push_back(key);
    out.push_back(cand.surface);
  }
  if (out.empty()) {
    for (const auto& t : tokens) {
      const std::string s = text.substr(t.begin, t.end - t.begin);
      if (is_word(s)) {
        out.push_back(s);
        break;
      }
    }
  }
  if (out.empty() && !tokens.empty()) out.push_back(text.substr(tokens[0].begin, tokens[0].end - tokens[0].begin));
  return out.dump();
}

std::string MockGenerator::summarize_cluster(const std::string& prompt) const {
  const std::string block = between(prompt, "<concepts>\n", "\n</concepts>");
  std::vector<std::string> members;
  for (const auto& line : lines_of(block)) {
    if (line.rfind("- ", 0) == 0) members.push_back(trim(std::string_view(line).substr(2)));
  }
  if (members.empty()) return json{{"label", ""}}.dump();
  std::sort(members.begin(), members.end(), [](const std::string& a, const std::string& b) {
    const auto wa = count_tokens(a), wb = count_tokens(b);
    return wa != wb ? wa < wb : a < b;
  });
  auto words = token_strings(members.front());
  if (words.size() > 8) words.resize(8);
  std::string label;
  for (const auto& w : words) label += (label.empty() ? "" : " ") + w;
  return json{{"label", label}}.dump();
}

std::string MockGenerator::generate_qa(const std::string& prompt, std::uint64_t digest) const {
  static const std::regex kUpTo(R"(up to (\d+) questions)");
  static const std::regex kLevel(R"(Combination level: (\d+))");
  const int per_combo = std::max(1, match_int(prompt, kUpTo, 3));
  const int level = match_int(prompt, kLevel, 1);
  const auto stems = parse_stems(between(prompt, "<evidence>\n", "\n</evidence>"));
  const std::string sentinel = std::string(kNoQuestionSentinel);

  std::vector<std::pair<std::string, std::string>> evidences;
  for (const auto& s : stems) evidences.insert(evidences.end(), s.evidences.begin(), s.evidences.end());
  if (evidences.empty()) return sentinel;

  if (options_.reject_disjoint_combos && stems.size() >= 2) {
    std::vector<std::set<std::string>> vocab;
    for (const auto& s : stems) {
      std::set<std::string> words;
      for (const auto& [id, text] : s.evidences) {
        for (auto& w : content_words(text)) words.insert(std::move(w));
      }
      vocab.push_back(std::move(words));
    }
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      for (std::size_t j = i + 1; j < vocab.size(); ++j) {
        const bool disjoint = std::none_of(vocab[i].begin(), vocab[i].end(),
                                           [&](const std::string& w) { return vocab[j].count(w) > 0; });
        if (disjoint) return sentinel;
      }
    }
  }

  std::vector<BloomLevel> allowed;
  std::string allowed_line = line_value(prompt, "Allowed Bloom levels:");
  for (std::size_t b = 0; b < allowed_line.size();) {
    auto e = allowed_line.find(',', b);
    if (e == std::string::npos) e = allowed_line.size();
    if (auto lvl = parse_bloom(allowed_line.substr(b, e - b))) allowed.push_back(*lvl);
    b = e + 1;
  }
  if (allowed.empty()) allowed.assign(kBloomLevels.begin(), kBloomLevels.end());
  if (level >= 2) {
    std::vector<BloomLevel> higher;
    std::copy_if(allowed.begin(), allowed.end(), std::back_inserter(higher), is_higher_order);
    if (!higher.empty()) allowed = higher;
  }

  std::string topic;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    if (i) topic += (i + 1 == stems.size()) ? " and " : ", ";
    topic += stems[i].label;
  }

  std::string answer;
  std::size_t used = 0;
  for (const auto& [id, text] : evidences) {
    if (used == 3) break;
    answer += (answer.empty() ? "" : " ") + first_sentence(text);
    ++used;
  }
  json ids = json::array();
  std::string id_list;
  for (const auto& [id, text] : evidences) {
    ids.push_back(id);
    id_list += (id_list.empty() ? "" : ", ") + id;
  }

  const std::size_t count = std::min<std::size_t>(1 + digest % per_combo, allowed.size());
  const std::size_t offset = (digest >> 16) % allowed.size();
  json questions = json::array();
  for (std::size_t q = 0; q < count; ++q) {
    const BloomLevel bloom = allowed[(offset + q) % allowed.size()];
    questions.push_back({{"question", question_for(bloom, topic)},
                         {"answer", answer},
                         {"reasoning", "The answer draws on " + id_list + ", which discuss " + topic + "."},
                         {"bloom", std::string(to_string(bloom))},
                         {"evidence_ids", ids}});
  }
  return json{{"questions", questions}}.dump();
}

std::string MockGenerator::misleading_context(const std::string& prompt, std::uint64_t digest) const {
  std::string topic = line_value(prompt, "Concepts:");
  if (topic.empty()) topic = "this topic";
  std::string passage;
  switch (digest % 3) {
    case 0:
      passage = "Discussions of " + topic +
                " often mention related background topics. Such accounts rarely settle the specific point in question.";
      break;
    case 1:
      passage = "Many reports on " + topic +
                " describe the surrounding context at length. They tend to leave the particular issue raised unaddressed.";
      break;
    default:
      passage = "Background material about " + topic +
                " is common in this field. Most of it concerns history and terminology rather than the matter asked about.";
      break;
  }
  return json{{"passage", passage}}.dump();
}

MockEmbedder::MockEmbedder(int dim, std::uint64_t seed, std::shared_ptr<ProviderStats> stats)
    : dim_(dim), seed_(seed), stats_(std::move(stats)) {}

std::string MockEmbedder::id() const {
  return "mock-embedder/dim=" + std::to_string(dim_) + "/seed=" + std::to_string(seed_);
}

Embedding MockEmbedder::embed_text(const std::string& text) const {
  std::vector<std::string> features = content_words(text);
  if (features.empty()) {
    for (auto& t : token_strings(text, true)) {
      if (is_word(t)) features.push_back(std::move(t));
    }
  }
  if (features.empty()) features.push_back(trim(text));

  Embedding v = Embedding::Zero(dim_);
  for (const auto& f : features) {
    const auto h = Hasher{}.add(static_cast<std::int64_t>(seed_)).add(f).u64();
    const auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_));
    v[bucket] += (h >> 63) ? 1.0 : -1.0;
  }
  if (v.norm() == 0.0) {
    // Opposite signs cancelled out in one bucket; fall back to the joined features.
    std::string joined;
    for (const auto& f : features) joined += f + " ";
    const auto h = Hasher{}.add(static_cast<std::int64_t>(seed_)).add(joined).u64();
    v[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_))] = 1.0;
  }
  return v / v.norm();
}

std::vector<Embedding> MockEmbedder::embed(const std::vector<std::string>& texts) {
  check_embed_batch(texts);
  if (stats_) stats_->record_embed();
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_text(t));
  return out;
}

MockReranker::MockReranker(std::shared_ptr<ProviderStats> stats) : stats_(std::move(stats)) {}

std::string MockReranker::id() const { return "mock-reranker/lexical"; }

double MockReranker::score(const std::string& query, const std::string& candidate) {
  const auto q = content_words(query);
  const std::set<std::string> qset(q.begin(), q.end());
  const auto c = content_words(candidate);
  const std::set<std::string> cset(c.begin(), c.end());
  double s = 0.0;
  if (!qset.empty()) {
    const auto shared = std::count_if(qset.begin(), qset.end(), [&](const std::string& w) { return cset.count(w) > 0; });
    s = static_cast<double>(shared) / static_cast<double>(qset.size());
  }
  const std::string fq = normalize_phrase(query);
  if (!fq.empty() && normalize_phrase(candidate).find(fq) != std::string::npos) s += 1.0;
  return s;
}

std::vector<RerankResult> MockReranker::rerank(const std::string& query, const std::vector<std::string>& candidates) {
  check_rerank_batch(candidates);
  if (stats_) stats_->record_rerank();
  std::vector<RerankResult> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) out.push_back({i, score(query, candidates[i])});
  return order_rerank_results(std::move(out));
}

Providers make_mock_providers(std::uint64_t seed, int dim, MockGeneratorOptions options) {
  Providers p;
  p.stats = std::make_shared<ProviderStats>();
  p.generator = std::make_shared<MockGenerator>(seed, p.stats, options);
  p.embedder = std::make_shared<MockEmbedder>(dim, seed, p.stats);
  p.reranker = std::make_shared<MockReranker>(p.stats);
  return p;
}

}  // namespace ragen
