#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace bmckit {

// Deterministic random source. The engine (mt19937_64) is bit-exact across
// platforms by the standard; every distribution below is implemented on top
// of the raw 64-bit stream instead of <random> distributions, whose output
// is implementation defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer on [0, n), unbiased via rejection.
  uint64_t uniform_int(uint64_t n) {
    const uint64_t rem = (UINT64_MAX % n + 1) % n;  // 2^64 mod n
    uint64_t v = next_u64();
    if (rem != 0) {
      const uint64_t limit = UINT64_MAX - rem;  // accept v <= limit
      while (v > limit) v = next_u64();
    }
    return v % n;
  }

  // Exp(1).
  double exponential() { return -std::log1p(-uniform()); }

  // Standard normal via Box-Muller; two uniforms per draw, no caching so the
  // stream position is a simple function of the number of calls.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Gamma(shape, 1), Marsaglia-Tsang; shape < 1 boosted through shape + 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Uniform on the (K-1)-simplex: normalized unit exponentials.
  std::vector<double> simplex(int k) {
    std::vector<double> out(static_cast<size_t>(k));
    double total = 0.0;
    for (auto& e : out) {
      e = exponential();
      total += e;
    }
    for (auto& e : out) e /= total;
    return out;
  }

  // Dirichlet with common concentration.
  std::vector<double> dirichlet(int k, double concentration) {
    std::vector<double> out(static_cast<size_t>(k));
    double total = 0.0;
    for (auto& e : out) {
      e = gamma(concentration);
      total += e;
    }
    if (total > 0.0) {
      for (auto& e : out) e /= total;
    }
    return out;
  }

 private:
  std::mt19937_64 eng_;
};

namespace detail {
inline uint64_t splitmix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace detail

// Child seed i of a root seed: the splitmix64 stream seeded at root, skipped
// ahead i+1 states. Injective in i, so child seeds are pairwise distinct.
inline uint64_t child_seed(uint64_t root, uint64_t i) {
  return detail::splitmix64(root + i * 0x9E3779B97F4A7C15ull);
}

}  // namespace bmckit
