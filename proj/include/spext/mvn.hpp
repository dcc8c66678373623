#pragma once

// Multivariate normal and Student-t rectangle probabilities.
//
// Dimensions 1-4 (normal and t) use deterministic quadrature accurate
// to ~1e-12, so downstream finite differencing and tight identity checks are
// not noise limited. Higher dimensions use randomized-shift quasi Monte Carlo
// with a fixed internal seed and a fixed point budget, so results are
// deterministic, smooth in the inputs, and reproducible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spext/stats.hpp"

namespace spext {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// P(X > dh, Y > dk) for standard bivariate normal with correlation r.
// Genz (2004) hybrid of Drezner-Wesolowsky and tail expansion.
inline double bvn_upper(double dh, double dk, double r) {
  if (std::isinf(dh) || std::isinf(dk)) {
    if (dh == kInf || dk == kInf) return 0.0;
    if (dh == -kInf) return dk == -kInf ? 1.0 : norm_cdf(-dk);
    return norm_cdf(-dh);
  }
  if (r >= 1.0) return norm_cdf(-std::max(dh, dk));
  if (r <= -1.0) return std::max(0.0, norm_cdf(-dk) - norm_cdf(dh));

  static const double w6[] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
  static const double x6[] = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
  static const double w12[] = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                               0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
  static const double x12[] = {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                               0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
  static const double w20[] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                               0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                               0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                               0.1527533871307259};
  static const double x20[] = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                               0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                               0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                               0.07652652113349733};
  const double* w;
  const double* x;
  int ng;
  double ar = std::fabs(r);
  if (ar < 0.3) {
    w = w6, x = x6, ng = 3;
  } else if (ar < 0.75) {
    w = w12, x = x12, ng = 6;
  } else {
    w = w20, x = x20, ng = 10;
  }

  double h = dh, k = dk, hk = h * k, bvn = 0.0;
  const double twopi = 6.283185307179586;
  if (ar < 0.925) {
    double hs = 0.5 * (h * h + k * k);
    double asr = std::asin(r);
    for (int i = 0; i < ng; ++i) {
      for (int is = -1; is <= 1; is += 2) {
        double sn = std::sin(asr * (is * x[i] + 1.0) * 0.5);
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / (2.0 * twopi) + norm_cdf(-h) * norm_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    double bs = (h - k) * (h - k);
    double c = (4.0 - hk) / 8.0;
    double d = (12.0 - hk) / 16.0;
    double asr = -0.5 * (bs / as + hk);
    if (asr > -100.0) {
      bvn = a * std::exp(asr) *
            (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    }
    if (-hk < 100.0) {
      double b = std::sqrt(bs);
      bvn -= std::exp(-0.5 * hk) * kSqrt2Pi * norm_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a *= 0.5;
    for (int i = 0; i < ng; ++i) {
      for (int is = -1; is <= 1; is += 2) {
        double xs = a * (is * x[i] + 1.0);
        xs = xs * xs;
        double rs = std::sqrt(1.0 - xs);
        double asr1 = -0.5 * (bs / xs + hk);
        if (asr1 > -100.0) {
          bvn += a * w[i] * std::exp(asr1) *
                 (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                  (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
    }
    bvn = -bvn / twopi;
    if (r > 0.0) {
      bvn += norm_cdf(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) bvn += norm_cdf(k) - norm_cdf(h);
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

// P(X < h, Y < k), standard margins.
inline double bvn_cdf(double h, double k, double r) { return bvn_upper(-h, -k, r); }

// P(a1<X<b1, a2<Y<b2), standard margins.
inline double bvn_rect(double a1, double b1, double a2, double b2, double r) {
  double p = bvn_upper(a1, a2, r) - bvn_upper(a1, b2, r) - bvn_upper(b1, a2, r) +
             bvn_upper(b1, b2, r);
  return std::clamp(p, 0.0, 1.0);
}

namespace detail {

inline double clamp_z(double z) { return std::clamp(z, -9.0, 9.0); }

// Standardize a rectangle problem: returns correlation matrix and scaled limits.
inline void standardize(const Mat& sigma, Vec& lo, Vec& hi, Mat& corr) {
  int d = static_cast<int>(sigma.rows());
  corr = sigma;
  for (int i = 0; i < d; ++i) {
    double s = std::sqrt(sigma(i, i));
    if (!(s > 0.0)) throw std::domain_error("mvn: nonpositive variance");
    if (std::isfinite(lo[i])) lo[i] /= s;
    if (std::isfinite(hi[i])) hi[i] /= s;
    for (int j = 0; j < d; ++j) corr(i, j) /= s;
    for (int j = 0; j < d; ++j) corr(j, i) /= s;
  }
}

// Trivariate normal rectangle by conditioning on the first coordinate and
// integrating a bivariate rectangle against the normal density.
inline double mvn3_rect_corr(const Vec& lo, const Vec& hi, const Mat& r) {
  double r01 = r(0, 1), r02 = r(0, 2), r12 = r(1, 2);
  double s1 = std::sqrt(std::max(1e-14, 1.0 - r01 * r01));
  double s2 = std::sqrt(std::max(1e-14, 1.0 - r02 * r02));
  double rc = std::clamp((r12 - r01 * r02) / (s1 * s2), -1.0, 1.0);
  double za = std::max(std::isfinite(lo[0]) ? lo[0] : -9.0, -9.0);
  double zb = std::min(std::isfinite(hi[0]) ? hi[0] : 9.0, 9.0);
  if (zb <= za) return 0.0;
  auto f = [&](double z) {
    double a1 = std::isfinite(lo[1]) ? (lo[1] - r01 * z) / s1 : -kInf;
    double b1 = std::isfinite(hi[1]) ? (hi[1] - r01 * z) / s1 : kInf;
    double a2 = std::isfinite(lo[2]) ? (lo[2] - r02 * z) / s2 : -kInf;
    double b2 = std::isfinite(hi[2]) ? (hi[2] - r02 * z) / s2 : kInf;
    return norm_pdf(z) * bvn_rect(a1, b1, a2, b2, rc);
  };
  using boost::math::quadrature::gauss_kronrod;
  double p = gauss_kronrod<double, 31>::integrate(f, za, zb, 8, 1e-12);
  return std::clamp(p, 0.0, 1.0);
}

// Four dimensional rectangle by conditioning on the first coordinate and
// integrating the trivariate conditional rectangle.
inline double mvn4_rect_corr(const Vec& lo, const Vec& hi, const Mat& r) {
  Vec r0 = r.block(1, 0, 3, 1);
  Mat cond = r.block(1, 1, 3, 3) - r0 * r0.transpose();
  Vec sd = cond.diagonal().cwiseMax(1e-14).cwiseSqrt();
  Mat cc = sd.cwiseInverse().asDiagonal() * cond * sd.cwiseInverse().asDiagonal();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) cc(i, j) = i == j ? 1.0 : std::clamp(cc(i, j), -1.0, 1.0);
  double za = std::max(std::isfinite(lo[0]) ? lo[0] : -9.0, -9.0);
  double zb = std::min(std::isfinite(hi[0]) ? hi[0] : 9.0, 9.0);
  if (zb <= za) return 0.0;
  Vec l3(3), h3(3);
  auto f = [&](double z) {
    for (int i = 0; i < 3; ++i) {
      l3[i] = std::isfinite(lo[i + 1]) ? (lo[i + 1] - r0[i] * z) / sd[i] : -kInf;
      h3[i] = std::isfinite(hi[i + 1]) ? (hi[i + 1] - r0[i] * z) / sd[i] : kInf;
    }
    return norm_pdf(z) * mvn3_rect_corr(l3, h3, cc);
  };
  // Fixed-order rule: the integrand is analytic in z, and nesting another
  // adaptive scheme over the adaptive trivariate routine can blow up on
  // near-singular conditional correlations.
  double p = boost::math::quadrature::gauss<double, 64>::integrate(f, za, zb);
  return std::clamp(p, 0.0, 1.0);
}

// Reordered Cholesky factorization for the separation-of-variables estimator.
// Variables are permuted so the narrowest conditional intervals come first.
struct Sov {
  Mat chol;
  Vec lo, hi;
  int dim;
};

inline Sov sov_prepare(Vec lo, Vec hi, Mat c) {
  int d = static_cast<int>(lo.size());
  Sov s{Mat::Zero(d, d), lo, hi, d};
  Vec y = Vec::Zero(d);
  for (int i = 0; i < d; ++i) {
    int best = i;
    double best_p = 2.0;
    for (int j = i; j < d; ++j) {
      double dj = c(j, j);
      for (int k = 0; k < i; ++k) dj -= s.chol(j, k) * s.chol(j, k);
      dj = std::sqrt(std::max(dj, 1e-14));
      double m = 0.0;
      for (int k = 0; k < i; ++k) m += s.chol(j, k) * y[k];
      double at = std::isfinite(s.lo[j]) ? (s.lo[j] - m) / dj : -kInf;
      double bt = std::isfinite(s.hi[j]) ? (s.hi[j] - m) / dj : kInf;
      double p = norm_cdf(bt) - norm_cdf(at);
      if (p < best_p) {
        best_p = p;
        best = j;
      }
    }
    if (best != i) {
      c.row(i).swap(c.row(best));
      c.col(i).swap(c.col(best));
      s.chol.row(i).swap(s.chol.row(best));
      std::swap(s.lo[i], s.lo[best]);
      std::swap(s.hi[i], s.hi[best]);
    }
    double dii = c(i, i);
    for (int k = 0; k < i; ++k) dii -= s.chol(i, k) * s.chol(i, k);
    dii = std::sqrt(std::max(dii, 1e-14));
    s.chol(i, i) = dii;
    for (int j = i + 1; j < d; ++j) {
      double v = c(j, i);
      for (int k = 0; k < i; ++k) v -= s.chol(j, k) * s.chol(i, k);
      s.chol(j, i) = v / dii;
    }
    double m = 0.0;
    for (int k = 0; k < i; ++k) m += s.chol(i, k) * y[k];
    double at = std::isfinite(s.lo[i]) ? (s.lo[i] - m) / dii : -kInf;
    double bt = std::isfinite(s.hi[i]) ? (s.hi[i] - m) / dii : kInf;
    double pa = norm_cdf(at), pb = norm_cdf(bt);
    double den = std::max(pb - pa, 1e-300);
    y[i] = (norm_pdf(at) - norm_pdf(bt)) / den;
  }
  return s;
}

// One separation-of-variables evaluation given d-1 uniforms; `scale`
// multiplies the finite limits (used by the Student-t mixing integral).
inline double sov_eval(const Sov& s, const double* u, double scale = 1.0) {
  int d = s.dim;
  double prob = 1.0;
  double y[64];
  for (int i = 0; i < d; ++i) {
    double m = 0.0;
    for (int k = 0; k < i; ++k) m += s.chol(i, k) * y[k];
    double dii = s.chol(i, i);
    double at = std::isfinite(s.lo[i]) ? (s.lo[i] * scale - m) / dii : -kInf;
    double bt = std::isfinite(s.hi[i]) ? (s.hi[i] * scale - m) / dii : kInf;
    double pa = norm_cdf(at), pb = norm_cdf(bt);
    double di = pb - pa;
    prob *= di;
    if (prob <= 0.0) return 0.0;
    if (i + 1 < d) {
      double t = pa + u[i] * di;
      t = std::clamp(t, 1e-16, 1.0 - 1e-16);
      y[i] = clamp_z(norm_quantile(t));
    }
  }
  return prob;
}

inline const std::vector<double>& sqrt_primes(int n) {
  static std::vector<double> sp = [] {
    std::vector<double> out;
    for (int c = 2; static_cast<int>(out.size()) < 128; ++c) {
      bool prime = true;
      for (int q = 2; q * q <= c; ++q)
        if (c % q == 0) {
          prime = false;
          break;
        }
      if (prime) out.push_back(std::sqrt(static_cast<double>(c)));
    }
    return out;
  }();
  if (n > static_cast<int>(sp.size())) throw std::domain_error("mvn: dimension too large");
  return sp;
}

struct QmcResult {
  double p;
  double err;
};

// Randomized Richtmyer lattice with a fixed internal seed and fixed budget.
template <typename F>
QmcResult qmc_mean(int nu, int npoints, int nshifts, F&& f) {
  const auto& sp = sqrt_primes(nu);
  std::mt19937_64 gen(0x5eed5eedULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double mean = 0.0, m2 = 0.0;
  std::vector<double> shift(nu), u(nu);
  for (int s = 0; s < nshifts; ++s) {
    for (int i = 0; i < nu; ++i) shift[i] = unif(gen);
    double acc = 0.0;
    for (int j = 1; j <= npoints; ++j) {
      for (int i = 0; i < nu; ++i) {
        double v = j * sp[i] + shift[i];
        u[i] = v - std::floor(v);
      }
      acc += (f(u.data()) - acc) / j;
    }
    double delta = acc - mean;
    mean += delta / (s + 1);
    m2 += delta * (acc - mean);
  }
  double sd = nshifts > 1 ? std::sqrt(m2 / (nshifts * (nshifts - 1.0))) : 0.0;
  return {mean, 3.0 * sd};
}

inline int qmc_points(int dim) {
  if (dim <= 8) return 32768;
  if (dim <= 16) return 16384;
  return 8192;
}

}  // namespace detail

// P(lo < X < hi) for X ~ N(0, sigma). Entries of lo/hi may be +-inf.
inline double mvn_rect(Vec lo, Vec hi, const Mat& sigma) {
  int d = static_cast<int>(lo.size());
  if (sigma.rows() != d || sigma.cols() != d) throw std::domain_error("mvn_rect: shape");
  for (int i = 0; i < d; ++i)
    if (hi[i] <= lo[i]) return 0.0;
  Mat corr;
  detail::standardize(sigma, lo, hi, corr);
  if (d == 1) return std::clamp(norm_cdf(hi[0]) - norm_cdf(lo[0]), 0.0, 1.0);
  if (d == 2) return bvn_rect(lo[0], hi[0], lo[1], hi[1], corr(0, 1));
  if (d == 3) return detail::mvn3_rect_corr(lo, hi, corr);
  if (d == 4) return detail::mvn4_rect_corr(lo, hi, corr);
  auto sov = detail::sov_prepare(lo, hi, corr);
  auto r = detail::qmc_mean(d - 1, detail::qmc_points(d), 12,
                            [&](const double* u) { return detail::sov_eval(sov, u); });
  return std::clamp(r.p, 0.0, 1.0);
}

// P(X < hi) for X ~ N(mu, sigma).
inline double mvn_cdf(const Vec& hi, const Vec& mu, const Mat& sigma) {
  Vec lo = Vec::Constant(hi.size(), -kInf);
  return mvn_rect(lo, hi - mu, sigma);
}

inline double mvn_cdf(const Vec& hi, const Mat& sigma) {
  Vec lo = Vec::Constant(hi.size(), -kInf);
  return mvn_rect(lo, hi, sigma);
}

// P(lo < X < hi) for X ~ t_nu(0, sigma) in the location-scale sense:
// X = Z * sqrt(nu) / chi_nu with Z ~ N(0, sigma).
inline double mvt_rect(Vec lo, Vec hi, const Mat& sigma, double nu) {
  int d = static_cast<int>(lo.size());
  if (!(nu > 0.0)) throw std::domain_error("mvt_rect: df");
  for (int i = 0; i < d; ++i)
    if (hi[i] <= lo[i]) return 0.0;
  Mat corr;
  detail::standardize(sigma, lo, hi, corr);
  if (d == 1) {
    double pb = std::isfinite(hi[0]) ? t_cdf(hi[0], nu) : 1.0;
    double pa = std::isfinite(lo[0]) ? t_cdf(lo[0], nu) : 0.0;
    return std::clamp(pb - pa, 0.0, 1.0);
  }
  if (d <= 4) {
    // Integrate the scaled normal rectangle over the chi mixing variable,
    // parameterized by its probability transform for a finite smooth domain.
    // Fixed-order rule for the same nesting reason as mvn4_rect_corr.
    double sn = std::sqrt(nu);
    auto f = [&](double p) {
      double s = chi_quantile(std::clamp(p, 1e-15, 1.0 - 1e-15), nu) / sn;
      if (d == 2) {
        auto sc = [&](double v) { return std::isfinite(v) ? v * s : v; };
        return bvn_rect(sc(lo[0]), sc(hi[0]), sc(lo[1]), sc(hi[1]), corr(0, 1));
      }
      Vec l2 = lo, h2 = hi;
      for (int i = 0; i < d; ++i) {
        if (std::isfinite(l2[i])) l2[i] *= s;
        if (std::isfinite(h2[i])) h2[i] *= s;
      }
      return d == 3 ? detail::mvn3_rect_corr(l2, h2, corr) : detail::mvn4_rect_corr(l2, h2, corr);
    };
    double p = boost::math::quadrature::gauss<double, 64>::integrate(f, 0.0, 1.0);
    return std::clamp(p, 0.0, 1.0);
  }
  auto sov = detail::sov_prepare(lo, hi, corr);
  double sn = std::sqrt(nu);
  auto body = [&](const double* u) {
    double s = chi_quantile(std::clamp(u[0], 1e-15, 1.0 - 1e-15), nu) / sn;
    return detail::sov_eval(sov, u + 1, s);
  };
  auto r = detail::qmc_mean(d, detail::qmc_points(d), 12, body);
  return std::clamp(r.p, 0.0, 1.0);
}

inline double mvt_cdf(const Vec& hi, const Mat& sigma, double nu) {
  Vec lo = Vec::Constant(hi.size(), -kInf);
  return mvt_rect(lo, hi, sigma, nu);
}

}  // namespace spext
