#pragma once

#include <cstdint>
#include <random>
#include <vector>

// Seeded randomness. The engine is std::mt19937_64 (fully specified by the
// standard); the draw helpers below replace the standard distributions, whose
// output is implementation-defined, so a seed pins byte-identical results on
// any platform.

namespace g4attn {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent stream for item `index` under a master seed; lets per-example
// work run in any order or thread without changing results.
inline Rng split_rng(uint64_t master_seed, uint64_t index) {
  return Rng(splitmix64(master_seed ^ splitmix64(index + 1)));
}

// Unbiased draw from [0, n) by rejection.
inline uint64_t uniform_index(Rng& rng, uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [-half_width, half_width].
inline double uniform_symmetric(Rng& rng, double half_width) {
  return (2.0 * uniform_unit(rng) - 1.0) * half_width;
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace g4attn
