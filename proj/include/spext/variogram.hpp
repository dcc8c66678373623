#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "spext/sites.hpp"

namespace spext {

// Anisotropic power-law semivariogram gamma(h) = (|V h| / lambda)^smooth with
// rotation/stretch matrix V = [[cos z, -sin z], [m sin z, m cos z]].
struct VariogramSpec {
  double lambda = 1.0;    // range, > 0
  double smooth = 1.0;    // power, in (0, 2]
  double rotation = 0.0;  // radians, |rotation| < pi/4
  double stretch = 1.0;   // second-axis scaling, > 0

  VariogramSpec(double lambda_, double smooth_, double rotation_ = 0.0, double stretch_ = 1.0)
      : lambda(lambda_), smooth(smooth_), rotation(rotation_), stretch(stretch_) {
    if (!(lambda > 0.0)) throw std::domain_error("variogram: range must be positive");
    if (!(smooth > 0.0 && smooth <= 2.0)) throw std::domain_error("variogram: power in (0,2]");
    if (!(std::fabs(rotation) < M_PI / 4.0))
      throw std::domain_error("variogram: |rotation| < pi/4");
    if (!(stretch > 0.0)) throw std::domain_error("variogram: stretch must be positive");
  }

  Eigen::Matrix2d aniso() const {
    double c = std::cos(rotation), s = std::sin(rotation);
    Eigen::Matrix2d v;
    v << c, -s, stretch * s, stretch * c;
    return v;
  }
};

inline double semivariogram(const VariogramSpec& spec, const Eigen::Vector2d& h) {
  double r = (spec.aniso() * h).norm();
  return r == 0.0 ? 0.0 : std::pow(r / spec.lambda, spec.smooth);
}

namespace detail {

inline Mat pd_with_jitter(Mat sigma, const char* what) {
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() == Eigen::Success) return sigma;
  double jitter = 1e-10 * sigma.trace() / sigma.rows();
  sigma.diagonal().array() += jitter;
  llt.compute(sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(std::string(what) + ": covariance not positive definite");
  return sigma;
}

}  // namespace detail

// Gaussian-increment covariance induced by a semivariogram, anchored at a
// reference point off the site set so the matrix is strictly positive
// definite: sigma_ij = gamma(s_i - s0) + gamma(s_j - s0) - gamma(s_i - s_j).
// The default anchor is the coordinate origin; if a site sits on the anchor
// it is moved just below the bounding box, deterministically.
inline Mat build_br_cov(const SiteSet& sites, const VariogramSpec& vario,
                        Eigen::Vector2d anchor = Eigen::Vector2d::Zero()) {
  const int d = sites.dim();
  for (int i = 0; i < d; ++i)
    if ((sites.coords.row(i).transpose() - anchor).norm() < 1e-9) {
      anchor[0] = sites.coords.col(0).minCoeff() - 1.0;
      anchor[1] = sites.coords.col(1).minCoeff() - 1.0;
      break;
    }
  Vec g0(d);
  for (int i = 0; i < d; ++i)
    g0[i] = semivariogram(vario, sites.coords.row(i).transpose() - anchor);
  Mat sigma(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double gij = semivariogram(
          vario, (sites.coords.row(i) - sites.coords.row(j)).transpose());
      sigma(i, j) = sigma(j, i) = g0[i] + g0[j] - gij;
    }
  }
  return detail::pd_with_jitter(std::move(sigma), "build_br_cov");
}

// Powered-exponential correlation rho(h) = exp{-gamma(h)} with unit diagonal.
inline Mat build_tet_corr(const SiteSet& sites, const VariogramSpec& vario) {
  const int d = sites.dim();
  Mat corr(d, d);
  for (int i = 0; i < d; ++i) {
    corr(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      double g = semivariogram(vario, (sites.coords.row(i) - sites.coords.row(j)).transpose());
      corr(i, j) = corr(j, i) = std::exp(-g);
    }
  }
  return detail::pd_with_jitter(std::move(corr), "build_tet_corr");
}

}  // namespace spext
