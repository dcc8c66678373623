#pragma once

// Extended skew-normal distribution: density, distribution function, moments
// and exact sampling through the hidden-truncation representation.

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "spext/mvn.hpp"
#include "spext/rng.hpp"
#include "spext/stats.hpp"

namespace spext {

struct EsnParams {
  Vec mu;
  Mat sigma;
  Vec alpha;
  double tau = 0.0;

  // Derived quantities shared by pdf/cdf/sampler.
  Vec omega;       // sqrt(diag(sigma))
  Mat sigma_bar;   // correlation matrix
  Vec delta;       // latent correlation, |delta_i| < 1
  double alpha0 = 0.0;
  double qf = 0.0;  // alpha' sigma_bar alpha

  EsnParams(Vec mu_, Mat sigma_, Vec alpha_, double tau_)
      : mu(std::move(mu_)), sigma(std::move(sigma_)), alpha(std::move(alpha_)), tau(tau_) {
    const int d = static_cast<int>(mu.size());
    if (sigma.rows() != d || alpha.size() != d) throw std::domain_error("esn: shape mismatch");
    omega = sigma.diagonal().cwiseSqrt();
    sigma_bar = omega.cwiseInverse().asDiagonal() * sigma * omega.cwiseInverse().asDiagonal();
    qf = alpha.dot(sigma_bar * alpha);
    delta = (sigma_bar * alpha) / std::sqrt(1.0 + qf);
    alpha0 = tau * std::sqrt(1.0 + qf);
    if (norm_cdf(tau) <= 0.0)
      throw std::underflow_error("esn: extension parameter too negative, Phi(tau) underflows");
  }

  int dim() const { return static_cast<int>(mu.size()); }
};

inline double mvn_logpdf(const Vec& x, const Vec& mu, const Mat& sigma) {
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::domain_error("mvn_logpdf: covariance not PD");
  Vec z = llt.matrixL().solve(x - mu);
  double logdet = 0.0;
  for (int i = 0; i < sigma.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
  return -0.5 * z.squaredNorm() - logdet - 0.5 * sigma.rows() * std::log(2.0 * M_PI);
}

inline double esn_logpdf(const Vec& x, const EsnParams& p) {
  double lin = p.alpha0 + p.alpha.dot((x - p.mu).cwiseQuotient(p.omega));
  return mvn_logpdf(x, p.mu, p.sigma) + norm_logcdf(lin) - norm_logcdf(p.tau);
}

inline double esn_pdf(const Vec& x, const EsnParams& p) { return std::exp(esn_logpdf(x, p)); }

inline double esn_cdf(const Vec& x, const EsnParams& p) {
  const int d = p.dim();
  Mat c(d + 1, d + 1);
  c.topLeftCorner(d, d) = p.sigma_bar;
  c.topRightCorner(d, 1) = -p.delta;
  c.bottomLeftCorner(1, d) = -p.delta.transpose();
  c(d, d) = 1.0;
  Vec hi(d + 1);
  hi.head(d) = (x - p.mu).cwiseQuotient(p.omega);
  hi[d] = p.tau;
  return std::min(1.0, mvn_cdf(hi, c) / norm_cdf(p.tau));
}

// Mean derived from the moment generating function.
inline Vec esn_mean(const EsnParams& p) {
  return p.mu + p.omega.cwiseProduct(p.delta) * (norm_pdf(p.tau) / norm_cdf(p.tau));
}

// One draw: a one-sided truncated latent normal plus a conditional Gaussian.
inline Vec sample_esn_one(const EsnParams& p, const Mat& chol_cond, Rng& rng) {
  const int d = p.dim();
  double u0 = rng.normal_above(-p.tau);
  Vec g(d);
  for (int i = 0; i < d; ++i) g[i] = rng.normal();
  Vec z = p.delta * u0 + chol_cond * g;
  return p.mu + p.omega.cwiseProduct(z);
}

// Cholesky factor of the conditional covariance given the latent variable.
inline Mat esn_cond_chol(const EsnParams& p) {
  Mat cond = p.sigma_bar - p.delta * p.delta.transpose();
  Eigen::LLT<Mat> llt(cond);
  if (llt.info() != Eigen::Success) {
    cond.diagonal().array() += 1e-12;
    llt.compute(cond);
    if (llt.info() != Eigen::Success) throw std::domain_error("esn: conditional covariance not PD");
  }
  return llt.matrixL();
}

inline Mat sample_esn(const EsnParams& p, int n, std::uint64_t seed) {
  Mat out(n, p.dim());
  Mat l = esn_cond_chol(p);
  for (int i = 0; i < n; ++i) {
    auto rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    out.row(i) = sample_esn_one(p, l, rng).transpose();
  }
  return out;
}

}  // namespace spext
