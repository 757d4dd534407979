#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace ragen {

/// Revised Bloom's taxonomy, lower to higher order. Values are the rank.
enum class BloomLevel { Remembering = 1, Understanding, Applying, Analyzing, Evaluating, Creating };

inline constexpr std::array<BloomLevel, 6> kBloomLevels = {
    BloomLevel::Remembering, BloomLevel::Understanding, BloomLevel::Applying,
    BloomLevel::Analyzing,   BloomLevel::Evaluating,    BloomLevel::Creating};

constexpr int rank(BloomLevel level) { return static_cast<int>(level); }

constexpr std::string_view to_string(BloomLevel level) {
  switch (level) {
    case BloomLevel::Remembering: return "Remembering";
    case BloomLevel::Understanding: return "Understanding";
    case BloomLevel::Applying: return "Applying";
    case BloomLevel::Analyzing: return "Analyzing";
    case BloomLevel::Evaluating: return "Evaluating";
    case BloomLevel::Creating: return "Creating";
  }
  return "";
}

/// Case-insensitive name lookup.
std::optional<BloomLevel> parse_bloom(std::string_view name);

/// One-line description used in generation prompts.
std::string_view bloom_definition(BloomLevel level);

constexpr bool is_higher_order(BloomLevel level) { return rank(level) >= rank(BloomLevel::Analyzing); }

}  // namespace ragen
