#include "ragen/prompts.hpp"

#include <fstream>
#include <iterator>
#include <stdexcept>

#include "ragen/digest.hpp"

namespace ragen {
namespace detail {
extern const std::string_view kExtractConceptsTemplate;
extern const std::string_view kSummarizeClusterTemplate;
extern const std::string_view kGenerateQaTemplate;
extern const std::string_view kMisleadingContextTemplate;
}  // namespace detail

std::string_view file_name(PromptKind kind) {
  switch (kind) {
    case PromptKind::extract_concepts: return "extract_concepts.txt";
    case PromptKind::summarize_cluster: return "summarize_cluster.txt";
    case PromptKind::generate_qa: return "generate_qa.txt";
    case PromptKind::misleading_context: return "misleading_context.txt";
  }
  throw std::logic_error("unknown prompt kind");
}

PromptTemplates PromptTemplates::defaults() {
  return {std::string(detail::kExtractConceptsTemplate), std::string(detail::kSummarizeClusterTemplate),
          std::string(detail::kGenerateQaTemplate), std::string(detail::kMisleadingContextTemplate)};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t = defaults();
  auto read = [&](PromptKind kind, std::string& slot) {
    std::ifstream in(dir / file_name(kind), std::ios::binary);
    if (!in) return;
    slot.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  read(PromptKind::extract_concepts, t.extract_concepts);
  read(PromptKind::summarize_cluster, t.summarize_cluster);
  read(PromptKind::generate_qa, t.generate_qa);
  read(PromptKind::misleading_context, t.misleading_context);
  return t;
}

const std::string& PromptTemplates::get(PromptKind kind) const {
  switch (kind) {
    case PromptKind::extract_concepts: return extract_concepts;
    case PromptKind::summarize_cluster: return summarize_cluster;
    case PromptKind::generate_qa: return generate_qa;
    case PromptKind::misleading_context: return misleading_context;
  }
  throw std::logic_error("unknown prompt kind");
}

std::string PromptTemplates::digest(PromptKind kind) const { return sha256_hex(get(kind)); }

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::string_view prompt_task(std::string_view prompt) {
  static constexpr std::string_view kHeader = "### task: ";
  const auto pos = prompt.find(kHeader);
  if (pos == std::string_view::npos) return {};
  const auto begin = pos + kHeader.size();
  auto end = prompt.find('\n', begin);
  if (end == std::string_view::npos) end = prompt.size();
  return prompt.substr(begin, end - begin);
}

}  // namespace ragen
