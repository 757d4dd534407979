#include "ragen/bloom.hpp"

#include "ragen/text.hpp"

namespace ragen {

std::optional<BloomLevel> parse_bloom(std::string_view name) {
  const std::string folded = fold_case(trim(name));
  for (auto level : kBloomLevels) {
    if (fold_case(to_string(level)) == folded) return level;
  }
  return std::nullopt;
}

std::string_view bloom_definition(BloomLevel level) {
  switch (level) {
    case BloomLevel::Remembering: return "retrieve facts, terms or statements as given";
    case BloomLevel::Understanding: return "explain ideas or relationships in one's own words";
    case BloomLevel::Applying: return "use the material to handle a new situation";
    case BloomLevel::Analyzing: return "break the material into parts and relate them, citing evidence";
    case BloomLevel::Evaluating: return "justify a judgment against explicit criteria";
    case BloomLevel::Creating: return "combine elements into a new, coherent proposal";
  }
  return "";
}

}  // namespace ragen
