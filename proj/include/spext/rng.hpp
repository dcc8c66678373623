#pragma once

#include <cstdint>
#include <random>

#include "spext/stats.hpp"

namespace spext {

// splitmix64, used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a33285a34c25ULL;
  return z ^ (z >> 31);
}

// Per-sample random stream. Streams derived from the same (seed, index)
// pair are identical regardless of threading, so batch generation is
// reproducible under parallel execution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    Rng r(0);
    r.gen_.seed(seq);
    return r;
  }

  // Uniform on (0,1), endpoints excluded.
  double uniform() {
    const double scale = 1.0 / 9007199254740992.0;  // 2^-53
    double u = static_cast<double>(gen_() >> 11) * scale;
    return u > 0.0 ? u : scale;
  }

  double normal() { return norm_quantile(uniform()); }

  double exponential() { return -std::log(uniform()); }

  // Unit Pareto: Pr(R > x) = 1/x, x > 1.
  double pareto() { return 1.0 / uniform(); }

  // Standard normal truncated to (lo, inf). Works in the survival scale so
  // far-right truncation points keep full precision.
  double normal_above(double lo) {
    double s = norm_cdf(-lo) * uniform();
    if (s <= 0.0) s = std::nextafter(0.0, 1.0);
    return -norm_quantile(s);
  }

  // Standard normal truncated to (lo, hi).
  double normal_between(double lo, double hi) {
    if (lo > 0.0) {
      double slo = norm_cdf(-lo), shi = norm_cdf(-hi);
      double s = shi + uniform() * (slo - shi);
      if (s <= 0.0) s = std::nextafter(0.0, 1.0);
      return -norm_quantile(s);
    }
    if (hi < 0.0) return -normal_between(-hi, -lo);
    double plo = norm_cdf(lo), phi = norm_cdf(hi);
    double u = plo + uniform() * (phi - plo);
    if (u <= 0.0) u = std::nextafter(0.0, 1.0);
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    return norm_quantile(u);
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace spext
