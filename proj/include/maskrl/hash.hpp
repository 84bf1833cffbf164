#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace maskrl {

// 64-bit FNV-1a. Used for content hashes recorded in run metadata; stable
// across platforms as long as callers feed little-endian bytes.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes);
  void update(std::string_view text);
  void update_u64(std::uint64_t value);
  void update_f64(double value);
  void update_f64(std::span<const double> values);
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex_digest(std::uint64_t digest);

}  // namespace maskrl
