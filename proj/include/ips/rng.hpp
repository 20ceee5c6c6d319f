#pragma once

#include <cmath>
#include <cstdint>

#include "ips/types.hpp"

namespace ips {

// Deterministic, platform-independent random stream (splitmix64).  We avoid
// std::uniform_real_distribution on purpose: its output is implementation
// defined, and report bodies must be reproducible byte for byte.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller (deterministic given the stream).
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Uniform direction on the unit sphere in R^dim.
  Vec unit_vector(Index dim) {
    Vec v(dim);
    double n2 = 0.0;
    do {
      for (Index i = 0; i < dim; ++i) v[i] = normal();
      n2 = v.squaredNorm();
    } while (n2 == 0.0);
    return v / std::sqrt(n2);
  }

  // Uniform in the closed ball of the given radius.
  Vec in_ball(Index dim, double radius) {
    double r = radius * std::pow(uniform01(), 1.0 / static_cast<double>(dim));
    return r * unit_vector(dim);
  }

private:
  std::uint64_t state_;
};

} // namespace ips
