#pragma once

// Independent reference implementations used only for validation: radial
// quadrature of the spectral densities for the intensity, Monte Carlo
// evaluation of the exponent function from its definition as E max W_k/x_k,
// and finite differencing for the partial derivatives. These deliberately
// avoid the closed forms in model.hpp.

#include <cmath>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spext/model.hpp"
#include "spext/rng.hpp"
#include "spext/truncdist.hpp"

namespace spext {

namespace detail {

// kappa(x) = int_0^inf r^D f_W(r x) dr with the substitution r = e^t.
template <typename LogDensity>
double radial_quadrature(int dd, const Vec& x, LogDensity&& logf) {
  using boost::math::quadrature::gauss_kronrod;
  auto g = [&](double t) {
    double r = std::exp(t);
    double lf = logf(Vec(r * x));
    double le = (dd + 1) * t + lf;
    return std::isfinite(lf) ? std::exp(le) : 0.0;
  };
  return gauss_kronrod<double, 61>::integrate(g, -40.0, 40.0, 14, 1e-11);
}

}  // namespace detail

inline double kappa_quadrature(const BrModel& m, const Vec& x) {
  // Spectral density: lognormal with log mean -diag/2.
  auto logf = [&](const Vec& w) {
    Vec y = w.array().log().matrix() + 0.5 * m.d.omt2;
    return mvn_logpdf(y, Vec::Zero(m.dim()), m.sigma) - w.array().log().sum();
  };
  return detail::radial_quadrature(m.dim(), x, logf);
}

inline double kappa_quadrature(const SbrModel& m, const Vec& x) {
  Vec alpha = m.sigma.diagonal().cwiseSqrt().cwiseProduct(m.eta);
  EsnParams base(Vec::Zero(m.dim()), m.sigma, alpha, 0.0);
  auto logf = [&](const Vec& w) {
    Vec y = 0.5 * m.d.omt2 + m.log_ring(w);
    return esn_logpdf(y, base) - w.array().log().sum();
  };
  return detail::radial_quadrature(m.dim(), x, logf);
}

inline double kappa_quadrature(const TetModel& m, const Vec& x) {
  auto logf = [&](const Vec& w) {
    Vec z(m.dim());
    double jac = 0.0;
    for (int k = 0; k < m.dim(); ++k) {
      double wo = m.a[k] * w[k];
      z[k] = std::pow(wo, 1.0 / m.nu);
      jac += m.log_a[k] - std::log(m.nu) + (1.0 / m.nu - 1.0) * std::log(wo);
    }
    return mvn_logpdf(z, Vec::Zero(m.dim()), m.sigma) - std::log(m.orthant) + jac;
  };
  return detail::radial_quadrature(m.dim(), x, logf);
}

// Monte Carlo of V(x) = E[max_k W_k / x_k].
inline double exponent_mc(const BrModel& m, const Vec& x, int n, std::uint64_t seed) {
  Mat l = m.sigma.llt().matrixL();
  auto rng = Rng::substream(seed, 0);
  Vec g(m.dim());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m.dim(); ++j) g[j] = rng.normal();
    Vec y = l * g - 0.5 * m.d.omt2;
    double mx = 0.0;
    for (int j = 0; j < m.dim(); ++j) mx = std::max(mx, std::exp(y[j]) / x[j]);
    acc += (mx - acc) / (i + 1);
  }
  return acc;
}

inline double exponent_mc(const SbrModel& m, const Vec& x, int n, std::uint64_t seed) {
  Vec alpha = m.sigma.diagonal().cwiseSqrt().cwiseProduct(m.eta);
  EsnParams base(Vec::Zero(m.dim()), m.sigma, alpha, 0.0);
  Mat l = esn_cond_chol(base);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    auto rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    Vec y = sample_esn_one(base, l, rng) - m.log_norm;
    double mx = 0.0;
    for (int j = 0; j < m.dim(); ++j) mx = std::max(mx, std::exp(y[j]) / x[j]);
    acc += (mx - acc) / (i + 1);
  }
  return acc;
}

inline double exponent_mc(const TetModel& m, const Vec& x, int n, std::uint64_t seed) {
  Mat draws = sample_trunc_mvn(Vec::Zero(m.dim()), m.sigma, n, seed);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double mx = 0.0;
    for (int j = 0; j < m.dim(); ++j)
      mx = std::max(mx, std::pow(draws(i, j), m.nu) / (m.a[j] * x[j]));
    acc += (mx - acc) / (i + 1);
  }
  return acc;
}

// Mixed central finite difference of -V over the coordinates in b, with one
// Richardson extrapolation step.
template <typename F>
double finite_diff_partial(F&& v, const Vec& x, const IndexSet& b, double rel_h = 1e-4) {
  auto mixed = [&](double scale) {
    const int k = static_cast<int>(b.size());
    double total = 0.0;
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      Vec xp = x;
      int minus = 0;
      for (int i = 0; i < k; ++i) {
        double h = rel_h * scale * x[b[i]];
        if (mask & (1u << i)) {
          xp[b[i]] -= h;
          ++minus;
        } else {
          xp[b[i]] += h;
        }
      }
      total += (minus % 2 == 0 ? 1.0 : -1.0) * v(xp);
    }
    for (int i = 0; i < k; ++i) total /= 2.0 * rel_h * scale * x[b[i]];
    return total;
  };
  double coarse = mixed(1.0), fine = mixed(0.5);
  return -(4.0 * fine - coarse) / 3.0;
}

}  // namespace spext
