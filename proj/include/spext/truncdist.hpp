#pragma once

// Distributions truncated below zero: distribution functions (as direct
// rectangle probabilities), an exponential-cost inclusion-exclusion reference
// used only by tests at small dimension, and samplers (exact rejection in low
// dimension, systematic-scan Gibbs above).

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

#include "spext/mvn.hpp"
#include "spext/rng.hpp"

namespace spext {

// Pr(0 <= X <= y) / Pr(X >= 0) for X ~ N(mean, cov). Entries of y may be +inf.
inline double trunc_mvn_cdf(const Vec& y, const Vec& mean, const Mat& cov) {
  const int d = static_cast<int>(y.size());
  for (int i = 0; i < d; ++i)
    if (std::isfinite(y[i]) && y[i] < 0.0) throw std::domain_error("trunc_mvn_cdf: negative bound");
  Vec lo = -mean;
  Vec hi(d);
  for (int i = 0; i < d; ++i) hi[i] = std::isfinite(y[i]) ? y[i] - mean[i] : kInf;
  double num = mvn_rect(lo, hi, cov);
  double den = mvn_rect(lo, Vec::Constant(d, kInf), cov);
  if (den <= 0.0) throw std::domain_error("trunc_mvn_cdf: zero orthant mass");
  return std::min(1.0, num / den);
}

inline double trunc_mvt_cdf(const Vec& y, const Vec& mean, const Mat& scale, double df) {
  const int d = static_cast<int>(y.size());
  for (int i = 0; i < d; ++i)
    if (std::isfinite(y[i]) && y[i] < 0.0) throw std::domain_error("trunc_mvt_cdf: negative bound");
  Vec lo = -mean;
  Vec hi(d);
  for (int i = 0; i < d; ++i) hi[i] = std::isfinite(y[i]) ? y[i] - mean[i] : kInf;
  double num = mvt_rect(lo, hi, scale, df);
  double den = mvt_rect(lo, Vec::Constant(d, kInf), scale, df);
  if (den <= 0.0) throw std::domain_error("trunc_mvt_cdf: zero orthant mass");
  return std::min(1.0, num / den);
}

namespace detail {

// Inclusion-exclusion expansion of the [0, y] rectangle from one-sided cdfs.
// 2^D terms; test oracle only.
template <typename Cdf>
double rect_incl_excl(const Vec& y, const Vec& mean, Cdf&& upper_cdf) {
  const int d = static_cast<int>(y.size());
  if (d > 20) throw std::domain_error("inclusion-exclusion oracle: dimension too large");
  double total = 0.0;
  Vec hi(d);
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    int bits = 0;
    for (int i = 0; i < d; ++i) {
      if (mask & (1u << i)) {
        hi[i] = -mean[i];
        ++bits;
      } else {
        hi[i] = std::isfinite(y[i]) ? y[i] - mean[i] : kInf;
      }
    }
    total += (bits % 2 == 0 ? 1.0 : -1.0) * upper_cdf(hi);
  }
  return total;
}

}  // namespace detail

inline double trunc_mvn_cdf_incl_excl(const Vec& y, const Vec& mean, const Mat& cov) {
  auto cdf = [&](const Vec& hi) {
    return mvn_rect(Vec::Constant(hi.size(), -kInf), hi, cov);
  };
  double num = detail::rect_incl_excl(y, mean, cdf);
  double den = detail::rect_incl_excl(Vec::Constant(y.size(), kInf), mean, cdf);
  return num / den;
}

inline double trunc_mvt_cdf_incl_excl(const Vec& y, const Vec& mean, const Mat& scale, double df) {
  auto cdf = [&](const Vec& hi) {
    return mvt_rect(Vec::Constant(hi.size(), -kInf), hi, scale, df);
  };
  double num = detail::rect_incl_excl(y, mean, cdf);
  double den = detail::rect_incl_excl(Vec::Constant(y.size(), kInf), mean, cdf);
  return num / den;
}

enum class TruncSampler { Auto, Exact, Gibbs };

namespace detail {

constexpr int kGibbsBurnin = 200;
constexpr int kGibbsThin = 5;
constexpr int kExactMaxDim = 10;

// Marsaglia-Tsang gamma generator, shape >= 1.
inline double gamma_draw(double shape, Rng& rng) {
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

struct GibbsCtx {
  Vec mean;
  Mat prec;        // inverse of cov/scale
  Vec cond_sd;     // 1/sqrt(prec_ii)
  int dim;
};

inline GibbsCtx gibbs_prepare(const Vec& mean, const Mat& cov) {
  GibbsCtx c;
  c.mean = mean;
  c.prec = cov.llt().solve(Mat::Identity(cov.rows(), cov.cols()));
  c.dim = static_cast<int>(mean.size());
  c.cond_sd = c.prec.diagonal().cwiseInverse().cwiseSqrt();
  return c;
}

// One systematic scan of truncated-normal full conditionals on [0, inf),
// with the precision matrix scaled by `prec_scale` (used for the t mixture).
inline void gibbs_sweep(const GibbsCtx& c, double prec_scale, Vec& x, Rng& rng) {
  double ps = std::sqrt(prec_scale);
  for (int i = 0; i < c.dim; ++i) {
    double s = 0.0;
    for (int j = 0; j < c.dim; ++j)
      if (j != i) s += c.prec(i, j) * (x[j] - c.mean[j]);
    double m = c.mean[i] - s / c.prec(i, i);
    double sd = c.cond_sd[i] / ps;
    x[i] = m + sd * rng.normal_above(-m / sd);
  }
}

inline Vec gibbs_start(const Vec& mean) {
  Vec x = mean.cwiseMax(0.01);
  return x;
}

}  // namespace detail

// Samples of X ~ N(mean, cov) conditioned on X >= 0.
inline Mat sample_trunc_mvn(const Vec& mean, const Mat& cov, int n, std::uint64_t seed,
                            TruncSampler mode = TruncSampler::Auto) {
  const int d = static_cast<int>(mean.size());
  bool exact = d <= detail::kExactMaxDim && mode != TruncSampler::Gibbs;
  if (exact) {
    double acc = mvn_rect(-mean, Vec::Constant(d, kInf), cov);
    if (acc < 1e-6) {
      if (mode == TruncSampler::Exact)
        throw std::runtime_error("sample_trunc_mvn: acceptance below 1e-6, use the Gibbs sampler");
      exact = false;
    }
  }
  Mat out(n, d);
  if (exact) {
    Mat l = cov.llt().matrixL();
    for (int i = 0; i < n; ++i) {
      auto rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
      Vec g(d);
      for (;;) {
        for (int j = 0; j < d; ++j) g[j] = rng.normal();
        Vec x = mean + l * g;
        if ((x.array() >= 0.0).all()) {
          out.row(i) = x.transpose();
          break;
        }
      }
    }
    return out;
  }
  auto ctx = detail::gibbs_prepare(mean, cov);
  auto rng = Rng::substream(seed, 0);
  Vec x = detail::gibbs_start(mean);
  for (int b = 0; b < detail::kGibbsBurnin; ++b) detail::gibbs_sweep(ctx, 1.0, x, rng);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < detail::kGibbsThin; ++t) detail::gibbs_sweep(ctx, 1.0, x, rng);
    out.row(i) = x.transpose();
  }
  return out;
}

// Samples of X ~ t_df(mean, scale) conditioned on X >= 0.
inline Mat sample_trunc_mvt(const Vec& mean, const Mat& scale, double df, int n,
                            std::uint64_t seed, TruncSampler mode = TruncSampler::Auto) {
  const int d = static_cast<int>(mean.size());
  bool exact = d <= detail::kExactMaxDim && mode != TruncSampler::Gibbs;
  if (exact) {
    double acc = mvt_rect(-mean, Vec::Constant(d, kInf), scale, df);
    if (acc < 1e-6) {
      if (mode == TruncSampler::Exact)
        throw std::runtime_error("sample_trunc_mvt: acceptance below 1e-6, use the Gibbs sampler");
      exact = false;
    }
  }
  Mat out(n, d);
  if (exact) {
    Mat l = scale.llt().matrixL();
    for (int i = 0; i < n; ++i) {
      auto rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
      Vec g(d);
      for (;;) {
        for (int j = 0; j < d; ++j) g[j] = rng.normal();
        double w = 2.0 * detail::gamma_draw(0.5 * df, rng);  // chi-squared df
        Vec x = mean + (l * g) * std::sqrt(df / w);
        if ((x.array() >= 0.0).all()) {
          out.row(i) = x.transpose();
          break;
        }
      }
    }
    return out;
  }
  // Gibbs on the normal-gamma mixture: X | w is Gaussian with covariance
  // scale * df / w, and w | X is gamma.
  auto ctx = detail::gibbs_prepare(mean, scale);
  auto rng = Rng::substream(seed, 0);
  Vec x = detail::gibbs_start(mean);
  double w = df;
  auto sweep = [&] {
    Vec r = x - mean;
    double q = r.dot(ctx.prec * r);
    w = 2.0 * detail::gamma_draw(0.5 * (df + d), rng) / (1.0 + q / df);
    detail::gibbs_sweep(ctx, w / df, x, rng);
  };
  for (int b = 0; b < detail::kGibbsBurnin; ++b) sweep();
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < detail::kGibbsThin; ++t) sweep();
    out.row(i) = x.transpose();
  }
  return out;
}

}  // namespace spext
