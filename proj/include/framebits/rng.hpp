#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace framebits {

// splitmix64 finalizer; used to derive independent RNG streams from (seed, index)
// pairs so that parallel and serial execution consume identical randomness.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  return mix64(mix64(seed) ^ (0x632be59bd9b4e019ULL * (stream + 1)));
}

inline std::mt19937_64 make_rng(uint64_t seed, uint64_t stream = 0) {
  return std::mt19937_64(mix_seed(seed, stream));
}

// Bounded draw with rejection; avoids the implementation-defined behavior of
// std::uniform_int_distribution.
inline uint64_t draw_below(std::mt19937_64& rng, uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

// Uniform double in [0, 1).
inline double draw_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double draw_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * draw_unit(rng);
}

template <typename T>
void shuffle_fisher_yates(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(draw_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace framebits
