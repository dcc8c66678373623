#pragma once

// Kernel-spline representation of the per-site skewness field: centred and
// normalized Gaussian kernels guarantee the sum-to-zero constraint on eta.

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "spext/sites.hpp"
#include "spext/stats.hpp"

namespace spext {

struct SkewFieldSpec {
  Mat centers;     // J x 2 kernel centres
  Vec b;           // J coefficients
  double sigma_b;  // kernel bandwidth, > 0
  Vec background;  // optional per-site additive term (empty = zero)

  SkewFieldSpec(Mat centers_, Vec b_, double sigma_b_, Vec background_ = Vec())
      : centers(std::move(centers_)), b(std::move(b_)), sigma_b(sigma_b_),
        background(std::move(background_)) {
    if (centers.cols() != 2 || centers.rows() != b.size())
      throw std::domain_error("SkewFieldSpec: centers must be J x 2 matching b");
    if (!(sigma_b > 0.0)) throw std::domain_error("SkewFieldSpec: bandwidth must be positive");
  }
};

// Centred, normalized kernel basis: column j holds K_j(s_i) with sum 0 and
// sum of squares 1 over the sites.
inline Mat kernel_basis(const SiteSet& sites, const SkewFieldSpec& skew) {
  const int d = sites.dim();
  const int nj = static_cast<int>(skew.b.size());
  Mat k(d, nj);
  for (int j = 0; j < nj; ++j) {
    for (int i = 0; i < d; ++i) {
      double dist = (sites.coords.row(i) - skew.centers.row(j)).norm();
      k(i, j) = norm_pdf(dist / (2.0 * skew.sigma_b));
    }
    k.col(j).array() -= k.col(j).mean();
    double norm = k.col(j).norm();
    if (norm < 1e-14)
      throw std::runtime_error("kernel_basis: degenerate kernel (constant over sites)");
    k.col(j) /= norm;
  }
  return k;
}

inline Vec eta_from_kernels(const SiteSet& sites, const SkewFieldSpec& skew) {
  Vec eta = skew.b.size() > 0 ? Vec(kernel_basis(sites, skew) * skew.b) : Vec(Vec::Zero(sites.dim()));
  if (skew.background.size() > 0) {
    if (skew.background.size() != sites.dim())
      throw std::domain_error("eta_from_kernels: background length mismatch");
    eta += skew.background;
  }
  return eta;
}

// xi = Sigma eta / sqrt(1 + eta' Sigma eta).
inline Vec xi_from_eta(const Vec& eta, const Mat& sigma) {
  return sigma * eta / std::sqrt(1.0 + eta.dot(sigma * eta));
}

// Inverse map; requires 1 - xi' Sigma^{-1} xi > 0.
inline Vec eta_from_xi(const Vec& xi, const Mat& sigma) {
  Vec si_xi = sigma.llt().solve(xi);
  double rem = 1.0 - xi.dot(si_xi);
  if (!(rem > 0.0)) throw std::domain_error("eta_from_xi: xi outside the feasible region");
  return si_xi / std::sqrt(rem);
}

}  // namespace spext
