#include "ragen/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstring>
#include <stdexcept>

namespace ragen {
namespace {

std::array<unsigned char, 32> sha256_raw(std::string_view data) {
  std::array<unsigned char, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha256 digest failed");
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  static constexpr char kHex[] = "0123456789abcdef";
  const auto raw = sha256_raw(data);
  std::string hex(raw.size() * 2, '0');
  for (std::size_t i = 0; i < raw.size(); ++i) {
    hex[2 * i] = kHex[raw[i] >> 4];
    hex[2 * i + 1] = kHex[raw[i] & 0x0f];
  }
  return hex;
}

std::uint64_t hash64(std::string_view data) {
  const auto raw = sha256_raw(data);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | raw[i];
  return v;
}

Hasher& Hasher::add(std::string_view field) {
  buffer_ += std::to_string(field.size());
  buffer_ += ':';
  buffer_.append(field);
  return *this;
}

Hasher& Hasher::add(std::int64_t value) { return add(std::to_string(value)); }

Hasher& Hasher::add(double value) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof bits);
  return add(std::to_string(bits));
}

std::string Hasher::hex() const { return sha256_hex(buffer_); }

std::uint64_t Hasher::u64() const { return hash64(buffer_); }

}  // namespace ragen
