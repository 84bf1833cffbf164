#include "maskrl/hash.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace maskrl {

namespace {
constexpr std::uint64_t kPrime = 0x100000001b3ULL;
}

void Fnv1a::update(std::span<const std::byte> bytes) {
  for (auto b : bytes) {
    state_ ^= static_cast<std::uint64_t>(b);
    state_ *= kPrime;
  }
}

void Fnv1a::update(std::string_view text) {
  update(std::as_bytes(std::span(text.data(), text.size())));
}

void Fnv1a::update_u64(std::uint64_t value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  std::byte raw[8];
  std::memcpy(raw, &value, 8);
  update(raw);
}

void Fnv1a::update_f64(double value) { update_u64(std::bit_cast<std::uint64_t>(value)); }

void Fnv1a::update_f64(std::span<const double> values) {
  update(std::as_bytes(values));
}

std::string hex_digest(std::uint64_t digest) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << digest;
  return os.str();
}

}  // namespace maskrl
