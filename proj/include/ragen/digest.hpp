#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ragen {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// First 8 bytes of SHA-256, big-endian.
std::uint64_t hash64(std::string_view data);

/// Builds a digest over a sequence of fields. Each field is length-prefixed,
/// so ("ab", "c") and ("a", "bc") never collide.
class Hasher {
 public:
  Hasher& add(std::string_view field);
  Hasher& add(std::int64_t value);
  Hasher& add(double value);

  std::string hex() const;
  std::uint64_t u64() const;

 private:
  std::string buffer_;
};

}  // namespace ragen
