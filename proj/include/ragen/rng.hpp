#pragma once

#include <cstdint>
#include <iterator>
#include <random>
#include <string_view>
#include <utility>

#include "ragen/digest.hpp"

namespace ragen {

/// Seeded generator with distribution code written out here so sequences do
/// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = 0;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(std::distance(first, last));
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed for a named purpose.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
  return Hasher{}.add(static_cast<std::int64_t>(seed)).add(purpose).u64();
}

}  // namespace ragen
