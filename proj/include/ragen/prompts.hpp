#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace ragen {

enum class PromptKind { extract_concepts, summarize_cluster, generate_qa, misleading_context };

std::string_view file_name(PromptKind kind);

/// Reply a generator gives when no meaningful question exists for a combo.
inline constexpr std::string_view kNoQuestionSentinel = "NO_MEANINGFUL_QUESTION";

/// The four prompt templates. Placeholders are `{name}`; braces that do not
/// name a supplied variable are left untouched.
struct PromptTemplates {
  std::string extract_concepts;
  std::string summarize_cluster;
  std::string generate_qa;
  std::string misleading_context;

  static PromptTemplates defaults();
  /// Loads `<dir>/<kind>.txt` for each kind, falling back to the default.
  static PromptTemplates load(const std::filesystem::path& dir);

  const std::string& get(PromptKind kind) const;
  std::string digest(PromptKind kind) const;
};

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// The task name from a prompt's "### task: <name>" header line, or "".
std::string_view prompt_task(std::string_view prompt);

}  // namespace ragen
