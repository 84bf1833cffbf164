#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace maskrl {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; good avalanche for turning structured ids into seeds.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed, a purpose tag and an index.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

/// Samples an index from a probability vector (entries sum to ~1).
int sample_categorical(std::span<const double> probs, Rng& rng);

}  // namespace maskrl
