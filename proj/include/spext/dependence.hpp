#pragma once

// Bivariate extremal coefficients: closed forms for all three models,
// empirical estimators, and per-reference-site dependence maps.

#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "spext/model.hpp"

namespace spext {

// theta_2 = 2 Phi(sqrt(gamma12 / 2)) for the Brown-Resnick model.
inline double theta2_br(double gamma12) {
  if (!(gamma12 >= 0.0)) throw std::domain_error("theta2_br: gamma12 must be nonnegative");
  return 2.0 * norm_cdf(std::sqrt(0.5 * gamma12));
}

// Skewed Brown-Resnick pair coefficient from the 2x2 covariance and xi.
inline double theta2_sbr(const Mat& sigma, const Vec& xi) {
  if (sigma.rows() != 2 || sigma.cols() != 2 || xi.size() != 2)
    throw std::domain_error("theta2_sbr: needs a 2x2 covariance and a 2-vector xi");
  double g12 = 0.5 * (sigma(0, 0) + sigma(1, 1) - 2.0 * sigma(0, 1));
  double theta = 0.0;
  for (int i = 0; i < 2; ++i) {
    int j = 1 - i;
    Vec upper(2);
    upper << std::log(norm_cdf(xi[j]) / norm_cdf(xi[i])) + g12, xi[i];
    Mat cov(2, 2);
    cov << 2.0 * g12, xi[i] - xi[j], xi[i] - xi[j], 1.0;
    theta += mvn_cdf(upper, cov) / norm_cdf(xi[i]);
  }
  return theta;
}

namespace detail {

inline double t_cdf(double x, double df) {
  return boost::math::cdf(boost::math::students_t(df), x);
}

}  // namespace detail

// Truncated extremal-t pair coefficient, Eq-(19)-style ratio of t cdfs.
inline double theta2_tet(double rho, double nu) {
  if (!(std::fabs(rho) <= 1.0)) throw std::domain_error("theta2_tet: |rho| <= 1 required");
  if (!(nu > 0.0)) throw std::domain_error("theta2_tet: df must be positive");
  if (rho == 1.0) return 1.0;
  double s = std::sqrt((nu + 1.0) / (1.0 - rho * rho));
  double ta = detail::t_cdf((1.0 - rho) * s, nu + 1.0);
  double tb = detail::t_cdf(-rho * s, nu + 1.0);
  return 2.0 * (ta - tb) / (1.0 - tb);
}

// Plain extremal-t pair coefficient, for comparison.
inline double theta2_et(double rho, double nu) {
  if (!(std::fabs(rho) <= 1.0)) throw std::domain_error("theta2_et: |rho| <= 1 required");
  if (!(nu > 0.0)) throw std::domain_error("theta2_et: df must be positive");
  if (rho == 1.0) return 1.0;
  double s = std::sqrt((nu + 1.0) / (1.0 - rho * rho));
  return 2.0 * detail::t_cdf((1.0 - rho) * s, nu + 1.0);
}

enum class Theta2Mode { MaximaMadogram, ExceedanceRatio };

// Empirical pair coefficient. Madogram mode expects componentwise maxima on
// the unit Frechet scale; exceedance mode expects threshold exceedances and
// returns 2 - Pr(Z_i > u | Z_j > u). NaN entries are treated as missing.
inline double empirical_theta2(const Mat& data, int i, int j,
                               Theta2Mode mode = Theta2Mode::MaximaMadogram, double u = 1.0) {
  if (i < 0 || j < 0 || i >= data.cols() || j >= data.cols())
    throw std::domain_error("empirical_theta2: site index out of range");
  int pairs = 0;
  double mado = 0.0;
  int denom = 0, joint = 0;
  for (int r = 0; r < data.rows(); ++r) {
    double a = data(r, i), b = data(r, j);
    if (std::isnan(a) || std::isnan(b)) continue;
    ++pairs;
    mado += 0.5 * std::fabs(std::exp(-1.0 / a) - std::exp(-1.0 / b));
    if (b > u) {
      ++denom;
      if (a > u) ++joint;
    }
  }
  if (pairs < 30)
    throw std::runtime_error("empirical_theta2: fewer than 30 complete pairs");
  double theta;
  if (mode == Theta2Mode::MaximaMadogram) {
    double nu_f = mado / pairs;
    theta = (1.0 + 2.0 * nu_f) / (1.0 - 2.0 * nu_f);
  } else {
    if (denom == 0)
      throw std::runtime_error("empirical_theta2: no exceedances of the threshold");
    theta = 2.0 - static_cast<double>(joint) / denom;
  }
  return std::min(2.0, std::max(1.0, theta));
}

struct DepMap {
  int reference = 0;
  Vec theta2;  // one value per site, = 1 at the reference (analytic)
  std::string source;
};

inline DepMap depmap(const BrModel& m, int reference) {
  const int d = m.dim();
  if (reference < 0 || reference >= d) throw std::domain_error("depmap: bad reference index");
  DepMap out{reference, Vec(d), "analytic-br"};
  for (int j = 0; j < d; ++j) {
    double g = 0.5 * (m.sigma(j, j) + m.sigma(reference, reference) -
                      2.0 * m.sigma(j, reference));
    out.theta2[j] = j == reference ? 1.0 : theta2_br(g);
  }
  return out;
}

inline DepMap depmap(const SbrModel& m, int reference) {
  const int d = m.dim();
  if (reference < 0 || reference >= d) throw std::domain_error("depmap: bad reference index");
  DepMap out{reference, Vec(d), "analytic-sbr"};
  for (int j = 0; j < d; ++j) {
    if (j == reference) {
      out.theta2[j] = 1.0;
      continue;
    }
    Mat s2(2, 2);
    s2 << m.sigma(reference, reference), m.sigma(reference, j), m.sigma(j, reference),
        m.sigma(j, j);
    Vec xi2(2);
    xi2 << m.xi[reference], m.xi[j];
    out.theta2[j] = theta2_sbr(s2, xi2);
  }
  return out;
}

inline DepMap depmap(const TetModel& m, int reference) {
  const int d = m.dim();
  if (reference < 0 || reference >= d) throw std::domain_error("depmap: bad reference index");
  DepMap out{reference, Vec(d), "analytic-tet"};
  for (int j = 0; j < d; ++j)
    out.theta2[j] = j == reference ? 1.0 : theta2_tet(m.sigma(reference, j), m.nu);
  return out;
}

inline DepMap depmap(const Mat& data, int reference,
                     Theta2Mode mode = Theta2Mode::MaximaMadogram, double u = 1.0) {
  const int d = static_cast<int>(data.cols());
  if (reference < 0 || reference >= d) throw std::domain_error("depmap: bad reference index");
  DepMap out{reference, Vec(d), "empirical"};
  for (int j = 0; j < d; ++j)
    out.theta2[j] = j == reference ? 1.0 : empirical_theta2(data, j, reference, mode, u);
  return out;
}

}  // namespace spext
