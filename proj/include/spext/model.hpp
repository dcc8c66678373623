#pragma once

// Exponent functions V, intensities kappa and partial derivatives V_B for the
// Brown-Resnick, skewed Brown-Resnick and truncated extremal-t models.
//
// Conventions: x may contain +inf entries (marginalized coordinates); index
// subsets are sorted vectors of zero-based site indices; "log x-ring" denotes
// the transformed coordinate log(2 x_k Phi(xi_k)) of the skewed model.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "spext/esn.hpp"
#include "spext/mvn.hpp"
#include "spext/skewfield.hpp"
#include "spext/stats.hpp"

namespace spext {

using IndexSet = std::vector<int>;

namespace detail {

inline void check_positive(const Vec& x) {
  for (int i = 0; i < x.size(); ++i)
    if (!(x[i] > 0.0)) throw std::domain_error("model: coordinates must be positive");
}

inline IndexSet complement(const IndexSet& b, int d) {
  IndexSet c;
  std::vector<char> in(d, 0);
  for (int i : b) {
    if (i < 0 || i >= d) throw std::domain_error("model: index out of range");
    if (in[i]) throw std::domain_error("model: repeated index");
    in[i] = 1;
  }
  for (int i = 0; i < d; ++i)
    if (!in[i]) c.push_back(i);
  return c;
}

template <typename T>
Vec subset(const T& v, const IndexSet& idx) {
  Vec out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

inline Mat submatrix(const Mat& m, const IndexSet& rows, const IndexSet& cols) {
  Mat out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

// Increment-projection quantities shared by the Gaussian-log models.
struct ProjDerived {
  Mat inv;
  double logdet = 0.0;
  Vec q;
  double oq = 0.0;
  Mat proj;  // inv - q q' / oq, null space spanned by the ones vector
  Vec omt2;  // diag of the covariance

  explicit ProjDerived(const Mat& sigma) {
    Eigen::LLT<Mat> llt(sigma);
    if (llt.info() != Eigen::Success) throw std::domain_error("model: covariance not PD");
    inv = llt.solve(Mat::Identity(sigma.rows(), sigma.cols()));
    for (int i = 0; i < sigma.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    q = inv.rowwise().sum();
    oq = q.sum();
    proj = inv - q * q.transpose() / oq;
    omt2 = sigma.diagonal();
  }
};

// Unnormalized [0, y] rectangle of a t distribution; empty dimension is 1.
inline double t_rect0(const Vec& y, const Vec& mu, const Mat& scale, double df) {
  if (y.size() == 0) return 1.0;
  Vec hi(y.size());
  for (int i = 0; i < y.size(); ++i) hi[i] = std::isfinite(y[i]) ? y[i] - mu[i] : kInf;
  return mvt_rect(-mu, hi, scale, df);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Brown-Resnick

struct BrModel {
  Mat sigma;
  detail::ProjDerived d;

  explicit BrModel(Mat sigma_) : sigma(std::move(sigma_)), d(sigma) {}
  int dim() const { return static_cast<int>(sigma.rows()); }
};

inline double br_exponent(const BrModel& m, const Vec& x) {
  const int dd = m.dim();
  detail::check_positive(x);
  double v = 0.0;
  for (int k = 0; k < dd; ++k) {
    if (!std::isfinite(x[k])) continue;
    Vec upper(dd - 1);
    Mat cov(dd - 1, dd - 1);
    int r = 0;
    for (int j = 0; j < dd; ++j) {
      if (j == k) continue;
      double mu_kj = m.sigma(j, k) - m.sigma(k, k);
      upper[r] = std::isfinite(x[j])
                     ? std::log(x[j] / x[k]) + 0.5 * (m.d.omt2[j] - m.d.omt2[k]) - mu_kj
                     : kInf;
      int c = 0;
      for (int l = 0; l < dd; ++l) {
        if (l == k) continue;
        cov(r, c) = m.sigma(j, l) - m.sigma(j, k) - m.sigma(k, l) + m.sigma(k, k);
        ++c;
      }
      ++r;
    }
    double p = dd == 1 ? 1.0 : mvn_cdf(upper, cov);
    v += p / x[k];
  }
  return v;
}

namespace detail {

// Quadratic part of the Wadsworth-Tawn intensity in the log coordinates v.
inline double wt_log_quadratic(const ProjDerived& d, const Vec& v) {
  double quad = v.dot(d.proj * v) + v.dot(2.0 * d.q / d.oq + d.proj * d.omt2) +
                (d.q.dot(d.omt2) - 1.0) / d.oq + 0.25 * d.omt2.dot(d.proj * d.omt2);
  return -0.5 * quad;
}

inline double wt_log_const(const ProjDerived& d, int dd) {
  return -0.5 * d.logdet - 0.5 * std::log(d.oq) - 0.5 * (dd - 1) * std::log(2.0 * M_PI);
}

}  // namespace detail

inline double br_log_intensity(const BrModel& m, const Vec& x) {
  detail::check_positive(x);
  Vec v = x.array().log();
  return detail::wt_log_const(m.d, m.dim()) + detail::wt_log_quadratic(m.d, v) - v.sum();
}

inline double br_intensity(const BrModel& m, const Vec& x) {
  return std::exp(br_log_intensity(m, x));
}

// -V_B(x): marginal intensity on B times the conditional Gaussian mass of the
// complement below x. Infinite complement entries marginalize out.
inline double br_partial_V(const BrModel& m, const IndexSet& b, const Vec& x) {
  const int dd = m.dim();
  detail::check_positive(x);
  if (b.empty()) throw std::domain_error("br_partial_V: empty index set");
  IndexSet c = detail::complement(b, dd);
  Vec xb = detail::subset(x, b);
  for (int i = 0; i < xb.size(); ++i)
    if (!std::isfinite(xb[i])) throw std::domain_error("br_partial_V: infinite entry in B");
  if (c.empty()) return br_intensity(m, x);
  BrModel marg(detail::submatrix(m.sigma, b, b));
  double km = br_intensity(marg, xb);
  Vec vb = xb.array().log();
  Mat mcc = detail::submatrix(m.d.proj, c, c);
  Mat mcb = detail::submatrix(m.d.proj, c, b);
  Eigen::LLT<Mat> llt(mcc);
  if (llt.info() != Eigen::Success) throw std::domain_error("br_partial_V: projection block");
  Vec rhs = mcb * vb + detail::subset(m.d.q, c) / m.d.oq +
            0.5 * detail::subset(Vec(m.d.proj * m.d.omt2), c);
  Vec mu_t = -llt.solve(rhs);
  Mat sig_t = llt.solve(Mat::Identity(c.size(), c.size()));
  Vec upper(c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    upper[i] = std::isfinite(x[c[i]]) ? std::log(x[c[i]]) - mu_t[i] : kInf;
  return km * mvn_cdf(upper, sig_t);
}

// ---------------------------------------------------------------------------
// Skewed Brown-Resnick

struct SbrModel {
  Mat sigma;
  Vec eta;
  Vec xi;
  detail::ProjDerived d;
  Vec logphi_xi;     // log Phi(xi_k)
  Vec log_norm;      // a_k = log 2 + omt2_k/2 + log Phi(xi_k)
  double c0 = 1.0;   // (1 + (eta'1)^2 / oq)^{-1/2}
  Vec beta;          // c0 (I - q 1'/oq) eta
  double tau_const;  // c0 (eta'1) / oq

  SbrModel(Mat sigma_, Vec eta_, Vec xi_)
      : sigma(std::move(sigma_)), eta(std::move(eta_)), xi(std::move(xi_)), d(sigma) {
    const int dd = static_cast<int>(sigma.rows());
    if (eta.size() != dd || xi.size() != dd) throw std::domain_error("sbr: shape mismatch");
    logphi_xi = Vec(dd);
    for (int k = 0; k < dd; ++k) logphi_xi[k] = norm_logcdf(xi[k]);
    log_norm = Vec::Constant(dd, std::log(2.0)) + 0.5 * d.omt2 + logphi_xi;
    double es = eta.sum();
    c0 = 1.0 / std::sqrt(1.0 + es * es / d.oq);
    beta = c0 * (eta - d.q * es / d.oq);
    tau_const = c0 * es / d.oq;
  }

  static SbrModel from_eta(Mat sigma, const Vec& eta) {
    Vec xi = xi_from_eta(eta, sigma);
    return SbrModel(std::move(sigma), eta, xi);
  }
  static SbrModel from_xi(Mat sigma, const Vec& xi) {
    Vec eta = eta_from_xi(xi, sigma);
    return SbrModel(std::move(sigma), eta, xi);
  }

  int dim() const { return static_cast<int>(sigma.rows()); }

  // log(2 x_k Phi(xi_k)); +inf maps to +inf.
  Vec log_ring(const Vec& x) const {
    Vec v(x.size());
    for (int k = 0; k < x.size(); ++k)
      v[k] = std::isfinite(x[k]) ? std::log(2.0 * x[k]) + logphi_xi[k] : kInf;
    return v;
  }
};

inline double sbr_exponent(const SbrModel& m, const Vec& x) {
  const int dd = m.dim();
  detail::check_positive(x);
  Vec ring = m.log_ring(x);
  double v = 0.0;
  for (int k = 0; k < dd; ++k) {
    if (!std::isfinite(x[k])) continue;
    // D-dim Gaussian cdf of the increments joint with the latent slant
    // coordinate, divided by Phi(xi_k).
    Vec upper(dd);
    Mat cov(dd, dd);
    int r = 0;
    for (int j = 0; j < dd; ++j) {
      if (j == k) continue;
      double mu_kj = m.sigma(j, k) - m.sigma(k, k);
      upper[r] = std::isfinite(ring[j])
                     ? ring[j] - ring[k] + 0.5 * (m.d.omt2[j] - m.d.omt2[k]) - mu_kj
                     : kInf;
      int c = 0;
      for (int l = 0; l < dd; ++l) {
        if (l == k) continue;
        cov(r, c) = m.sigma(j, l) - m.sigma(j, k) - m.sigma(k, l) + m.sigma(k, k);
        ++c;
      }
      cov(r, dd - 1) = cov(dd - 1, r) = -(m.xi[j] - m.xi[k]);
      ++r;
    }
    upper[dd - 1] = m.xi[k];
    cov(dd - 1, dd - 1) = 1.0;
    double p = mvn_cdf(upper, cov);
    v += p / (x[k] * std::exp(m.logphi_xi[k]));
  }
  return v;
}

inline double sbr_log_intensity(const SbrModel& m, const Vec& x) {
  detail::check_positive(x);
  Vec v = m.log_ring(x);
  double tau_t = m.beta.dot(v + 0.5 * m.d.omt2) + m.tau_const;
  return std::log(2.0) + norm_logcdf(tau_t) + detail::wt_log_const(m.d, m.dim()) +
         detail::wt_log_quadratic(m.d, v) - x.array().log().sum();
}

inline double sbr_intensity(const SbrModel& m, const Vec& x) {
  return std::exp(sbr_log_intensity(m, x));
}

inline double sbr_partial_V(const SbrModel& m, const IndexSet& b, const Vec& x) {
  const int dd = m.dim();
  detail::check_positive(x);
  if (b.empty()) throw std::domain_error("sbr_partial_V: empty index set");
  IndexSet c = detail::complement(b, dd);
  Vec xb = detail::subset(x, b);
  for (int i = 0; i < xb.size(); ++i)
    if (!std::isfinite(xb[i])) throw std::domain_error("sbr_partial_V: infinite entry in B");
  if (c.empty()) return sbr_intensity(m, x);
  // Marginal intensity: the slant-location pair marginalizes to the xi
  // subvector with the covariance block.
  SbrModel marg = SbrModel::from_xi(detail::submatrix(m.sigma, b, b), detail::subset(m.xi, b));
  double km = sbr_intensity(marg, xb);
  Vec ring = m.log_ring(x);
  Vec vb = detail::subset(ring, b);
  Mat mcc = detail::submatrix(m.d.proj, c, c);
  Mat mcb = detail::submatrix(m.d.proj, c, b);
  Eigen::LLT<Mat> llt(mcc);
  if (llt.info() != Eigen::Success) throw std::domain_error("sbr_partial_V: projection block");
  Vec rhs = mcb * vb + detail::subset(m.d.q, c) / m.d.oq +
            0.5 * detail::subset(Vec(m.d.proj * m.d.omt2), c);
  Vec mu_t = -llt.solve(rhs);
  Mat sig_t = llt.solve(Mat::Identity(c.size(), c.size()));
  Vec beta_c = detail::subset(m.beta, c);
  Vec alpha_t = sig_t.diagonal().cwiseSqrt().cwiseProduct(beta_c);
  double alpha0_t = detail::subset(m.beta, b).dot(vb + 0.5 * detail::subset(m.d.omt2, b)) +
                    beta_c.dot(mu_t + 0.5 * detail::subset(m.d.omt2, c)) + m.tau_const;
  double tau_bar = alpha0_t / std::sqrt(1.0 + beta_c.dot(sig_t * beta_c));
  EsnParams cond(mu_t, sig_t, alpha_t, tau_bar);
  return km * esn_cdf(detail::subset(ring, c), cond);
}

// ---------------------------------------------------------------------------
// Truncated extremal-t

struct TetModel {
  Mat sigma;  // correlation matrix
  double nu;
  Mat inv;
  double logdet = 0.0;
  double orthant;    // Gaussian mass of the positive orthant
  Vec t_inf;         // per-k one-sided t masses in the exponent denominators
  Vec a;             // normalizers
  Vec log_a;

  TetModel(Mat sigma_, double nu_) : sigma(std::move(sigma_)), nu(nu_) {
    const int dd = static_cast<int>(sigma.rows());
    if (!(nu > 0.0)) throw std::domain_error("tet: df must be positive");
    for (int i = 0; i < dd; ++i)
      if (std::fabs(sigma(i, i) - 1.0) > 1e-10)
        throw std::domain_error("tet: correlation matrix must have unit diagonal");
    Eigen::LLT<Mat> llt(sigma);
    if (llt.info() != Eigen::Success) throw std::domain_error("tet: correlation not PD");
    inv = llt.solve(Mat::Identity(dd, dd));
    for (int i = 0; i < dd; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    orthant = mvn_rect(Vec::Zero(dd), Vec::Constant(dd, kInf), sigma);
    t_inf = Vec(dd);
    a = Vec(dd);
    double lead = 0.5 * (nu - 2.0) * std::log(2.0) + std::lgamma(0.5 * (nu + 1.0)) -
                  std::log(orthant) - 0.5 * std::log(M_PI);
    for (int k = 0; k < dd; ++k) {
      auto [mu, scale] = cond_moments(k);
      t_inf[k] = detail::t_rect0(Vec::Constant(dd - 1, kInf), mu, scale, nu + 1.0);
      a[k] = std::exp(lead) * t_inf[k];
    }
    log_a = a.array().log();
  }

  int dim() const { return static_cast<int>(sigma.rows()); }

  // Location and scale of the conditional one-sided t in the exponent terms.
  std::pair<Vec, Mat> cond_moments(int k) const {
    const int dd = dim();
    Vec mu(dd - 1);
    Mat scale(dd - 1, dd - 1);
    int r = 0;
    for (int j = 0; j < dd; ++j) {
      if (j == k) continue;
      mu[r] = sigma(j, k);
      int c = 0;
      for (int l = 0; l < dd; ++l) {
        if (l == k) continue;
        scale(r, c) = (sigma(j, l) - sigma(j, k) * sigma(k, l)) / (nu + 1.0);
        ++c;
      }
      ++r;
    }
    return {mu, scale};
  }
};

inline Vec tet_normalizers(const TetModel& m) { return m.a; }

inline double tet_exponent(const TetModel& m, const Vec& x) {
  const int dd = m.dim();
  detail::check_positive(x);
  double v = 0.0;
  for (int k = 0; k < dd; ++k) {
    if (!std::isfinite(x[k])) continue;
    Vec y(dd - 1);
    int r = 0;
    for (int j = 0; j < dd; ++j) {
      if (j == k) continue;
      y[r] = std::isfinite(x[j])
                 ? std::pow(m.a[j] * x[j] / (m.a[k] * x[k]), 1.0 / m.nu)
                 : kInf;
      ++r;
    }
    auto [mu, scale] = m.cond_moments(k);
    double num = detail::t_rect0(y, mu, scale, m.nu + 1.0);
    v += num / (x[k] * m.t_inf[k]);
  }
  return v;
}

inline double tet_log_intensity(const TetModel& m, const Vec& x) {
  const int dd = m.dim();
  detail::check_positive(x);
  Vec z(dd);
  for (int k = 0; k < dd; ++k) z[k] = std::pow(m.a[k] * x[k], 1.0 / m.nu);
  double q2 = z.dot(m.inv * z);
  double lp = 0.0;
  for (int k = 0; k < dd; ++k) lp += (m.log_a[k] + (1.0 - m.nu) * std::log(x[k])) / m.nu;
  return lp - std::log(m.orthant) - (dd - 1) * std::log(m.nu) - 0.5 * m.logdet -
         0.5 * dd * std::log(M_PI) - 0.5 * (2.0 - m.nu) * std::log(2.0) +
         std::lgamma(0.5 * (m.nu + dd)) - 0.5 * (m.nu + dd) * std::log(q2);
}

inline double tet_intensity(const TetModel& m, const Vec& x) {
  return std::exp(tet_log_intensity(m, x));
}

inline double tet_partial_V(const TetModel& m, const IndexSet& b, const Vec& x) {
  const int dd = m.dim();
  detail::check_positive(x);
  if (b.empty()) throw std::domain_error("tet_partial_V: empty index set");
  IndexSet c = detail::complement(b, dd);
  const int kk = static_cast<int>(b.size());
  Vec zb(kk);
  for (int i = 0; i < kk; ++i) {
    if (!std::isfinite(x[b[i]])) throw std::domain_error("tet_partial_V: infinite entry in B");
    zb[i] = std::pow(m.a[b[i]] * x[b[i]], 1.0 / m.nu);
  }
  Mat sbb = detail::submatrix(m.sigma, b, b);
  Eigen::LLT<Mat> llt(sbb);
  if (llt.info() != Eigen::Success) throw std::domain_error("tet_partial_V: covariance block");
  Vec w = llt.solve(zb);
  double qb = std::sqrt(zb.dot(w));
  double logdet_b = 0.0;
  for (int i = 0; i < kk; ++i) logdet_b += 2.0 * std::log(llt.matrixL()(i, i));
  double lp = 0.0;
  for (int i = 0; i < kk; ++i) lp += (m.log_a[b[i]] + (1.0 - m.nu) * std::log(x[b[i]])) / m.nu;
  double log_pref = lp + 0.5 * (m.nu - 2.0) * std::log(2.0) + std::lgamma(0.5 * (kk + m.nu)) +
                    (1.0 - kk) * std::log(m.nu) - std::log(m.orthant) -
                    0.5 * kk * std::log(M_PI) - 0.5 * logdet_b - (kk + m.nu) * std::log(qb);
  if (c.empty()) return std::exp(log_pref);
  Mat scb = detail::submatrix(m.sigma, c, b);
  Mat scc = detail::submatrix(m.sigma, c, c);
  Vec mu = scb * w / qb;
  Mat scale = (scc - scb * llt.solve(scb.transpose())) / (kk + m.nu);
  Vec upper(c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    upper[i] = std::isfinite(x[c[i]]) ? std::pow(m.a[c[i]] * x[c[i]], 1.0 / m.nu) / qb : kInf;
  return std::exp(log_pref) * detail::t_rect0(upper, mu, scale, m.nu + kk);
}

// ---------------------------------------------------------------------------

inline double exponent_of(const BrModel& m, const Vec& x) { return br_exponent(m, x); }
inline double exponent_of(const SbrModel& m, const Vec& x) { return sbr_exponent(m, x); }
inline double exponent_of(const TetModel& m, const Vec& x) { return tet_exponent(m, x); }

inline double theta_d(const BrModel& m) { return br_exponent(m, Vec::Ones(m.dim())); }
inline double theta_d(const SbrModel& m) { return sbr_exponent(m, Vec::Ones(m.dim())); }
inline double theta_d(const TetModel& m) { return tet_exponent(m, Vec::Ones(m.dim())); }

}  // namespace spext
