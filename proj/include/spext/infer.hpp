#pragma once

// Spectral likelihood over threshold exceedances, simplex-driven fitting with
// box constraints handled by smooth reparametrization, jackknife standard
// errors, and AIC.

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "spext/gpd.hpp"
#include "spext/model.hpp"
#include "spext/neldermead.hpp"
#include "spext/simulate.hpp"
#include "spext/skewfield.hpp"
#include "spext/transform.hpp"
#include "spext/variogram.hpp"

namespace spext {

struct Exceedances {
  Mat rows;  // NaN marks missing sites
  double u = 0.0;
  RiskSpec risk = RiskSpec::l1();
  Vec risk_values;
};

// Risk of a row with missing entries contributing zero.
inline double risk_observed(const RiskSpec& risk, const Vec& x) {
  Vec y = x;
  for (int i = 0; i < y.size(); ++i)
    if (std::isnan(y[i])) y[i] = 0.0;
  return risk(y);
}

inline Exceedances select_exceedances(const Mat& values, const RiskSpec& risk, double u) {
  if (!(u > 0.0)) throw std::domain_error("select_exceedances: threshold must be positive");
  std::vector<int> keep;
  for (int i = 0; i < values.rows(); ++i)
    if (risk_observed(risk, values.row(i).transpose()) > u) keep.push_back(i);
  if (keep.empty()) throw std::runtime_error("select_exceedances: no rows exceed the threshold");
  Exceedances out;
  out.rows = Mat(keep.size(), values.cols());
  out.risk_values = Vec(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.rows.row(k) = values.row(keep[k]);
    out.risk_values[k] = risk_observed(risk, out.rows.row(k).transpose());
  }
  out.u = u;
  out.risk = risk;
  return out;
}

// Minimal admissible L1-scale threshold when inferring an Lp-risk process
// through the L1 spectral likelihood: u > D^{1 - 1/p}.
inline double lp_threshold_guard(const RiskSpec& risk, int d) {
  switch (risk.kind) {
    case RiskSpec::Kind::Lp:
      return std::pow(static_cast<double>(d), 1.0 - 1.0 / risk.p);
    case RiskSpec::Kind::Linf:
      return static_cast<double>(d);
    default:
      return 1.0;
  }
}

namespace detail {

inline double log_kappa(const BrModel& m, const Vec& x) { return br_log_intensity(m, x); }
inline double log_kappa(const SbrModel& m, const Vec& x) { return sbr_log_intensity(m, x); }
inline double log_kappa(const TetModel& m, const Vec& x) { return tet_log_intensity(m, x); }
inline double partial_v(const BrModel& m, const IndexSet& b, const Vec& x) {
  return br_partial_V(m, b, x);
}
inline double partial_v(const SbrModel& m, const IndexSet& b, const Vec& x) {
  return sbr_partial_V(m, b, x);
}
inline double partial_v(const TetModel& m, const IndexSet& b, const Vec& x) {
  return tet_partial_V(m, b, x);
}

}  // namespace detail

// log kappa of one exceedance row; missing sites are marginalized out.
template <typename Model>
double log_kappa_row(const Model& m, const Vec& row) {
  IndexSet observed;
  for (int j = 0; j < row.size(); ++j)
    if (!std::isnan(row[j])) observed.push_back(j);
  if (observed.empty()) throw std::domain_error("log_kappa_row: fully missing row");
  if (static_cast<int>(observed.size()) == row.size()) return detail::log_kappa(m, row);
  Vec x = row;
  for (int j = 0; j < x.size(); ++j)
    if (std::isnan(x[j])) x[j] = kInf;
  return std::log(detail::partial_v(m, observed, x));
}

template <typename Model>
double spectral_loglik(const Model& m, const Mat& rows) {
  double ll = 0.0;
  for (int i = 0; i < rows.rows(); ++i) ll += log_kappa_row(m, Vec(rows.row(i).transpose()));
  return ll;
}

template <typename Model>
double spectral_loglik(const Model& m, const Exceedances& exc) {
  return spectral_loglik(m, exc.rows);
}

enum class ModelFamily { Br, Sbr, Tet };

struct FitConfig {
  ModelFamily family = ModelFamily::Br;
  RiskSpec risk = RiskSpec::l1();
  double threshold = 0.0;  // explicit u when > 0, otherwise the quantile below
  double quantile = 0.95;
  bool fit_anisotropy = false;
  Mat centers;          // sBR kernel centres (J x 2)
  double sigma_b = 1.0;  // sBR kernel bandwidth
  bool fit_nu = true;    // tET
  double nu0 = 2.0;
  double lambda0 = 0.0;  // start value; <= 0 picks a data-driven default
  double smooth0 = 1.0;
  NmOptions nm;
  bool jackknife = false;
};

struct FitResult {
  std::vector<std::string> names;
  Vec estimates;
  Vec se;  // empty unless the jackknife ran
  double loglik = -kInf;
  double aic = kInf;
  int n_a = 0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
  bool converged = false;
  int jackknife_failures = 0;
  double wall_seconds = 0.0;
  std::string family;
};

namespace detail {

struct ParamSpace {
  const FitConfig& cfg;
  const SiteSet& sites;
  int nb = 0;  // sBR coefficient count

  explicit ParamSpace(const FitConfig& c, const SiteSet& s) : cfg(c), sites(s) {
    if (cfg.family == ModelFamily::Sbr) {
      if (cfg.centers.rows() == 0)
        throw std::domain_error("fit: sBR requires kernel centres");
      nb = static_cast<int>(cfg.centers.rows());
    }
  }

  int size() const {
    int n = 2 + (cfg.fit_anisotropy ? 2 : 0);
    if (cfg.family == ModelFamily::Sbr) n += nb;
    if (cfg.family == ModelFamily::Tet && cfg.fit_nu) n += 1;
    return n;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out = {"lambda", "smooth"};
    if (cfg.fit_anisotropy) {
      out.push_back("rotation");
      out.push_back("stretch");
    }
    for (int j = 0; j < nb; ++j) out.push_back("b" + std::to_string(j + 1));
    if (cfg.family == ModelFamily::Tet && cfg.fit_nu) out.push_back("nu");
    return out;
  }

  VariogramSpec vario(const Vec& t) const {
    double lambda = std::exp(t[0]);
    double smooth = 2.0 / (1.0 + std::exp(-t[1]));
    double rot = cfg.fit_anisotropy ? M_PI / 4.0 * std::tanh(t[2]) : 0.0;
    double stretch = cfg.fit_anisotropy ? std::exp(t[3]) : 1.0;
    return VariogramSpec(lambda, smooth, rot, stretch);
  }

  Vec bcoef(const Vec& t) const {
    int off = 2 + (cfg.fit_anisotropy ? 2 : 0);
    return t.segment(off, nb);
  }

  double nu(const Vec& t) const {
    if (cfg.family != ModelFamily::Tet || !cfg.fit_nu) return cfg.nu0;
    return std::exp(t[t.size() - 1]);
  }

  // Physical-scale estimates in the order reported by names().
  Vec physical(const Vec& t) const {
    auto v = vario(t);
    Vec out(size());
    int k = 0;
    out[k++] = v.lambda;
    out[k++] = v.smooth;
    if (cfg.fit_anisotropy) {
      out[k++] = v.rotation;
      out[k++] = v.stretch;
    }
    if (cfg.family == ModelFamily::Sbr) out.segment(k, nb) = bcoef(t), k += nb;
    if (cfg.family == ModelFamily::Tet && cfg.fit_nu) out[k] = nu(t);
    return out;
  }

  double negloglik(const Vec& t, const Mat& rows) const {
    try {
      auto v = vario(t);
      switch (cfg.family) {
        case ModelFamily::Br:
          return -spectral_loglik(BrModel(build_br_cov(sites, v)), rows);
        case ModelFamily::Sbr: {
          Mat cov = build_br_cov(sites, v);
          Vec eta = eta_from_kernels(sites, SkewFieldSpec(cfg.centers, bcoef(t), cfg.sigma_b));
          return -spectral_loglik(SbrModel::from_eta(std::move(cov), eta), rows);
        }
        case ModelFamily::Tet:
          return -spectral_loglik(TetModel(build_tet_corr(sites, v), nu(t)), rows);
      }
    } catch (const std::exception&) {
      return 1e12;
    }
    return 1e12;
  }

  Vec start(double lambda0, double smooth0, double bval, double nu0) const {
    Vec t = Vec::Zero(size());
    t[0] = std::log(lambda0);
    t[1] = -std::log(2.0 / smooth0 - 1.0);
    if (cfg.fit_anisotropy) {
      t[2] = 0.0;
      t[3] = 0.0;
    }
    int off = 2 + (cfg.fit_anisotropy ? 2 : 0);
    for (int j = 0; j < nb; ++j) t[off + j] = bval;
    if (cfg.family == ModelFamily::Tet && cfg.fit_nu) t[t.size() - 1] = std::log(nu0);
    return t;
  }
};

inline double median_pair_distance(const SiteSet& sites) {
  std::vector<double> d;
  for (int i = 0; i < sites.dim(); ++i)
    for (int j = 0; j < i; ++j) d.push_back((sites.coords.row(i) - sites.coords.row(j)).norm());
  return d.empty() ? 1.0 : quantile_type7(d, 0.5);
}

}  // namespace detail

inline FitResult fit(const FitConfig& cfg, const SiteSet& sites, const ObservationSet& data,
                     std::uint64_t seed) {
  if (data.margins == Margins::Raw)
    throw std::domain_error("fit: transform the data margins first");
  auto t_start = std::chrono::steady_clock::now();
  const int d = sites.dim();
  if (data.values.cols() != d) throw std::domain_error("fit: data/site dimension mismatch");

  double u = cfg.threshold;
  if (!(u > 0.0)) {
    std::vector<double> rv;
    for (int i = 0; i < data.values.rows(); ++i)
      rv.push_back(risk_observed(cfg.risk, data.values.row(i).transpose()));
    u = quantile_type7(rv, cfg.quantile);
  }
  if (u <= lp_threshold_guard(cfg.risk, d) && cfg.risk.kind == RiskSpec::Kind::Lp)
    throw std::domain_error("fit: threshold below the admissible bound for the Lp risk");
  auto exc = select_exceedances(data.values, cfg.risk, u);

  detail::ParamSpace ps(cfg, sites);
  double lambda0 = cfg.lambda0 > 0.0 ? cfg.lambda0 : detail::median_pair_distance(sites);
  std::vector<double> bstarts =
      cfg.family == ModelFamily::Sbr ? std::vector<double>{0.0, 0.5, -0.5, 2.0, -2.0}
                                     : std::vector<double>{0.0};

  auto obj = [&](const Vec& t) { return ps.negloglik(t, exc.rows); };
  NmResult best;
  for (double bval : bstarts) {
    auto res = nelder_mead(obj, ps.start(lambda0, cfg.smooth0, bval, cfg.nu0), cfg.nm);
    if (res.fval < best.fval) best = res;
  }

  FitResult out;
  out.names = ps.names();
  out.estimates = ps.physical(best.x);
  out.loglik = -best.fval;
  out.aic = 2.0 * ps.size() - 2.0 * out.loglik;
  out.n_a = static_cast<int>(exc.rows.rows());
  out.threshold = u;
  out.seed = seed;
  out.converged = best.converged;
  out.family = cfg.family == ModelFamily::Br    ? "br"
               : cfg.family == ModelFamily::Sbr ? "sbr"
                                                : "tet";

  if (cfg.jackknife && out.n_a >= 3) {
    const int m = out.n_a;
    Mat reps(m, ps.size());
    int failures = 0;
    NmOptions warm = cfg.nm;
    warm.step = 0.05;
    warm.max_iter = 300;
    for (int leave = 0; leave < m; ++leave) {
      Mat rows(m - 1, exc.rows.cols());
      int r = 0;
      for (int i = 0; i < m; ++i)
        if (i != leave) rows.row(r++) = exc.rows.row(i);
      auto res = nelder_mead([&](const Vec& t) { return ps.negloglik(t, rows); }, best.x, warm);
      if (!res.converged) ++failures;
      reps.row(leave) = ps.physical(res.x).transpose();
    }
    Vec mean = reps.colwise().mean();
    Vec se(ps.size());
    for (int j = 0; j < ps.size(); ++j)
      se[j] = std::sqrt((m - 1.0) / m * (reps.col(j).array() - mean[j]).square().sum());
    out.se = se;
    out.jackknife_failures = failures;
  }

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

}  // namespace spext
