#pragma once

#include <cstdint>
#include <random>

#include "molab/common.hpp"

namespace molab {

// splitmix64 of (seed, stream); independent substreams for per-item RNGs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <class Rng>
Point sample_in_ball(Rng& rng, const Point& center, double radius, int dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Point z{};
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      z[k] = u(rng);
      s += z[k] * z[k];
    }
    if (s > 1.0) continue;
    Point x = center;
    for (int k = 0; k < dim; ++k) x[k] += radius * z[k];
    return x;
  }
}

}  // namespace molab
