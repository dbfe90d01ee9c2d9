#pragma once

// Random streams for trials. Every trial owns one engine seeded from a
// (root, sweep point, trial) triple so its output does not depend on the
// order in which trials execute.
//
// The standard <random> distributions are implementation-defined, so the
// few draws the simulator needs are written out here and stay bit-exact
// across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>

namespace mdbins {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of trial `trial` at sweep point `point` under `root`.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t point,
                                 std::uint64_t trial) {
  std::uint64_t h = splitmix64(root);
  h = splitmix64(h ^ (point + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (trial + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

/// Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
inline std::uint64_t uniform_index(Engine& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  unsigned __int128 product = static_cast<unsigned __int128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<unsigned __int128>(rng()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Bernoulli(p). Degenerate p (0 or 1) consumes no randomness.
inline bool bernoulli(Engine& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01(rng) < p;
}

inline double exponential(Engine& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace mdbins
