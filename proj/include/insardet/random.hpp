#pragma once

#include <cstdint>
#include <random>

namespace insardet {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; used to derive independent per-item streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Stream for item `index` of a run seeded with `seed`. Content depends only
/// on (seed, index), never on scheduling order.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
  return Rng(mix_seed(mix_seed(seed ^ (salt * 0xD1B54A32D192ED03ull)) + index));
}

}  // namespace insardet
