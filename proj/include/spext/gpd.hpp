#pragma once

// Generalized Pareto MLE over threshold exceedances and threshold selection
// by shape-stability or an empirical quantile.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spext/neldermead.hpp"
#include "spext/transform.hpp"

namespace spext {

struct GpdParams {
  double scale = 1.0;
  double shape = 0.0;  // constrained to (-0.5, 1.5)
  int n = 0;
  double loglik = -kInf;
  bool converged = false;
};

namespace detail {

inline double gpd_negloglik(const std::vector<double>& y, double scale, double shape) {
  double ll = 0.0;
  for (double v : y) {
    double t = 1.0 + shape * v / scale;
    if (t <= 0.0) return kInf;
    ll += std::log(scale) + (1.0 + 1.0 / shape) * std::log(t);
  }
  return ll;
}

}  // namespace detail

// MLE for excesses over u; shape kept in (-0.5, 1.5) via a scaled logit.
inline GpdParams gpd_fit(const std::vector<double>& values, double u) {
  std::vector<double> y;
  for (double v : values)
    if (v > u) y.push_back(v - u);
  GpdParams out;
  out.n = static_cast<int>(y.size());
  if (out.n < 10) throw std::runtime_error("gpd_fit: fewer than 10 exceedances");
  double mean = 0.0;
  for (double v : y) mean += v / out.n;
  auto unpack = [](const Vec& t) {
    double scale = std::exp(t[0]);
    double shape = -0.5 + 2.0 / (1.0 + std::exp(-t[1]));
    return std::pair<double, double>(scale, shape);
  };
  auto obj = [&](const Vec& t) {
    auto [scale, shape] = unpack(t);
    return detail::gpd_negloglik(y, scale, shape);
  };
  Vec t0(2);
  t0 << std::log(mean), 0.0;  // shape start 0.5
  auto res = nelder_mead(obj, t0);
  auto [scale, shape] = unpack(res.x);
  out.scale = scale;
  out.shape = shape;
  out.loglik = -res.fval;
  out.converged = res.converged;
  return out;
}

struct GpdFit {
  std::vector<double> thresholds;
  std::vector<GpdParams> fits;  // one per threshold with >= 10 exceedances
  double selected = 0.0;
};

enum class ThresholdMethod { Quantile, GpdStability };

// Quantile mode: type-7 empirical quantile. Stability mode: smallest grid
// threshold beyond which successive shape estimates change by < tol.
inline GpdFit select_threshold(const std::vector<double>& risk_values, ThresholdMethod method,
                               double q = 0.95, double tol = 0.05) {
  GpdFit out;
  if (method == ThresholdMethod::Quantile) {
    out.selected = quantile_type7(risk_values, q);
    return out;
  }
  if (risk_values.size() < 50)
    throw std::runtime_error("select_threshold: need at least 50 values for gpd-stability");
  for (double p = 0.5; p < 0.965; p += 0.05) {
    double u = quantile_type7(risk_values, p);
    int count = 0;
    for (double v : risk_values)
      if (v > u) ++count;
    if (count < 10) break;
    out.thresholds.push_back(u);
    out.fits.push_back(gpd_fit(risk_values, u));
  }
  if (out.fits.empty())
    throw std::runtime_error("select_threshold: fewer than 10 exceedances at every threshold");
  std::size_t pick = out.fits.size() - 1;
  for (std::size_t i = 0; i + 1 < out.fits.size(); ++i) {
    bool stable = true;
    for (std::size_t j = i; j + 1 < out.fits.size() && stable; ++j)
      stable = std::fabs(out.fits[j + 1].shape - out.fits[j].shape) < tol;
    if (stable) {
      pick = i;
      break;
    }
  }
  out.selected = out.thresholds[pick];
  return out;
}

}  // namespace spext
