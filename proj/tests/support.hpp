#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ragen/config.hpp"
#include "ragen/prompts.hpp"
#include "ragen/providers.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "ragen-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Fixed text -> vector lookup; unknown texts throw.
class TableEmbedder : public ragen::Embedder {
 public:
  explicit TableEmbedder(std::map<std::string, ragen::Embedding> table) : table_(std::move(table)) {}
  std::string id() const override { return "table"; }
  std::vector<ragen::Embedding> embed(const std::vector<std::string>& texts) override {
    ++batches;
    std::vector<ragen::Embedding> out;
    for (const auto& t : texts) out.push_back(table_.at(t));
    return out;
  }
  int batches = 0;

 private:
  std::map<std::string, ragen::Embedding> table_;
};

inline fs::path fixture_dir() { return fs::path(RAGEN_FIXTURE_DIR); }

/// Copies the bundled six-document corpus and its config into `dir` and
/// loads that config, so outputs and caches land in the temp tree.
inline ragen::RunConfig copy_corpus6(const fs::path& dir) {
  fs::copy(fixture_dir() / "corpus6", dir, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  return ragen::load_config(dir / "config.json");
}

inline std::string read_text(const fs::path& path) {
  std::string out;
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot read " + path.string());
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, f)) > 0;) out.append(buf, n);
  std::fclose(f);
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

/// Replays canned replies in order, then repeats the last one.
class ScriptedGenerator : public ragen::Generator {
 public:
  explicit ScriptedGenerator(std::deque<std::string> replies) : replies_(std::move(replies)) {}

  std::string id() const override { return "scripted"; }
  std::string generate(const ragen::GenerationRequest& req) override {
    std::lock_guard lock(mutex_);
    prompts.push_back(req.prompt);
    if (replies_.size() > 1) {
      auto r = replies_.front();
      replies_.pop_front();
      return r;
    }
    return replies_.empty() ? std::string() : replies_.front();
  }

  std::vector<std::string> prompts;

 private:
  std::mutex mutex_;
  std::deque<std::string> replies_;
};

/// Counts calls per prompt task, then forwards. Optionally fails calls of
/// one task with a ProviderError or returns garbage for it.
class TaskCountingGenerator : public ragen::Generator {
 public:
  explicit TaskCountingGenerator(std::shared_ptr<ragen::Generator> inner) : inner_(std::move(inner)) {}

  // A hooked generator answers differently, so it must not share cache entries.
  std::string id() const override { return inner_->id() + (hook ? "/hooked" : ""); }
  std::string generate(const ragen::GenerationRequest& req) override {
    const std::string task(ragen::prompt_task(req.prompt));
    {
      std::lock_guard lock(mutex_);
      ++counts_[task];
    }
    if (hook) {
      if (auto r = hook(task, req)) return *r;
    }
    return inner_->generate(req);
  }

  std::map<std::string, std::size_t> counts() const {
    std::lock_guard lock(mutex_);
    return counts_;
  }

  std::function<std::optional<std::string>(const std::string&, const ragen::GenerationRequest&)> hook;

 private:
  std::shared_ptr<ragen::Generator> inner_;
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> counts_;
};

}  // namespace testing
