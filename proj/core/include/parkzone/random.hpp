#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace parkzone {

/// splitmix64 finalizer; combines a base seed with stream identifiers so that
/// parallel or reordered work draws from independent, reproducible streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> streams) {
  std::uint64_t s = mix_seed(base);
  for (auto v : streams) s = mix_seed(s ^ mix_seed(v));
  return s;
}

using Rng = std::mt19937_64;

/// Uniform in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Pick an index with probability proportional to `weights` (k-means++ seeding).
/// Falls back to uniform when every weight is zero.
template <class Range>
std::size_t weighted_index(Rng& rng, const Range& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  const std::size_t n = static_cast<std::size_t>(std::size(weights));
  if (!(total > 0.0)) return uniform_index(rng, n);
  double target = uniform01(rng) * total;
  std::size_t last_positive = 0;
  std::size_t i = 0;
  for (double w : weights) {
    if (w > 0.0) {
      last_positive = i;
      if (target < w) return i;
      target -= w;
    }
    ++i;
  }
  return last_positive;
}

}  // namespace parkzone
