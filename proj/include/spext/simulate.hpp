#pragma once

// Exact max-stable simulation via extremal functions and r-Pareto simulation
// for the L1 risk, general convex risks (rejection from the L1 process), and
// the constant-M baseline.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "spext/esn.hpp"
#include "spext/model.hpp"
#include "spext/rng.hpp"
#include "spext/truncdist.hpp"

namespace spext {

struct RiskSpec {
  enum class Kind { L1, Lp, Linf, Linear };
  Kind kind = Kind::L1;
  double p = 1.0;  // Lp exponent
  Vec weights;     // Linear coefficients, all >= 0

  static RiskSpec l1() { return RiskSpec{Kind::L1, 1.0, Vec()}; }
  static RiskSpec lp(double p) {
    if (!(p > 1.0)) throw std::domain_error("RiskSpec: Lp needs p > 1");
    return RiskSpec{Kind::Lp, p, Vec()};
  }
  static RiskSpec linf() { return RiskSpec{Kind::Linf, 1.0, Vec()}; }
  static RiskSpec linear(Vec m) {
    if ((m.array() < 0.0).any()) throw std::domain_error("RiskSpec: weights must be >= 0");
    if (m.maxCoeff() <= 0.0) throw std::domain_error("RiskSpec: weights must not all vanish");
    return RiskSpec{Kind::Linear, 1.0, std::move(m)};
  }

  double operator()(const Vec& x) const {
    switch (kind) {
      case Kind::L1:
        return x.sum();
      case Kind::Lp:
        return std::pow(x.array().pow(p).sum(), 1.0 / p);
      case Kind::Linf:
        return x.maxCoeff();
      case Kind::Linear:
        return weights.dot(x);
    }
    return 0.0;
  }

  // c0 = min{min_i 1/r(e_i), 1}; equals 1 for the norms.
  double c0(int d) const {
    if (kind != Kind::Linear) return 1.0;
    if (weights.size() != d) throw std::domain_error("RiskSpec: weight length mismatch");
    double c = 1.0;
    for (int i = 0; i < d; ++i)
      if (weights[i] > 0.0) c = std::min(c, 1.0 / weights[i]);
    return c;
  }

  // Default envelope constant M with r(x) <= M |x|_1.
  double dombry_m(int d) const {
    switch (kind) {
      case Kind::L1:
      case Kind::Linf:
        return 1.0;
      case Kind::Lp:
        return std::pow(static_cast<double>(d), p - 2.0);
      case Kind::Linear:
        return weights.maxCoeff();
    }
    return 1.0;
  }

  std::string tag() const {
    switch (kind) {
      case Kind::L1:
        return "l1";
      case Kind::Lp:
        return "l" + std::to_string(p);
      case Kind::Linf:
        return "linf";
      case Kind::Linear:
        return "linear";
    }
    return "";
  }
};

struct SimBatch {
  Mat samples;  // n x D
  std::uint64_t seed = 0;
  std::string model;
  std::string risk;  // empty for max-stable batches
  long long proposals_used = 0;
};

namespace detail {

// Tilted spectral-profile samplers: draw(i, rng) returns W/W(s_i) under the
// measure W(s_i) dPr, the building block of both the extremal-functions
// max-stable algorithm and the L1 r-Pareto sampler.

struct BrTilted {
  const BrModel& m;
  Mat chol;

  explicit BrTilted(const BrModel& model) : m(model), chol(model.sigma.llt().matrixL()) {}
  int dim() const { return m.dim(); }

  Vec draw(int i, Rng& rng) const {
    const int d = dim();
    Vec g(d);
    for (int j = 0; j < d; ++j) g[j] = rng.normal();
    Vec y = m.sigma.col(i) + chol * g;
    Vec w(d);
    for (int j = 0; j < d; ++j)
      w[j] = std::exp(y[j] - y[i] + 0.5 * (m.d.omt2[i] - m.d.omt2[j]));
    return w;
  }
};

struct SbrTilted {
  const SbrModel& m;
  std::vector<EsnParams> params;
  std::vector<Mat> chols;

  explicit SbrTilted(const SbrModel& model) : m(model) {
    const int d = m.dim();
    Vec alpha = m.sigma.diagonal().cwiseSqrt().cwiseProduct(m.eta);
    params.reserve(d);
    chols.reserve(d);
    for (int i = 0; i < d; ++i) {
      params.emplace_back(Vec(m.sigma.col(i)), m.sigma, alpha, m.xi[i]);
      chols.push_back(esn_cond_chol(params.back()));
    }
  }
  int dim() const { return m.dim(); }

  Vec draw(int i, Rng& rng) const {
    const int d = dim();
    Vec y = sample_esn_one(params[i], chols[i], rng);
    Vec w(d);
    for (int j = 0; j < d; ++j) w[j] = std::exp(y[j] - y[i] + m.log_norm[i] - m.log_norm[j]);
    return w;
  }
};

struct TetTilted {
  const TetModel& m;
  std::vector<Vec> mu;
  std::vector<Mat> chol;
  double df;

  explicit TetTilted(const TetModel& model) : m(model), df(model.nu + 1.0) {
    const int d = m.dim();
    mu.reserve(d);
    chol.reserve(d);
    for (int i = 0; i < d; ++i) {
      auto [loc, scale] = m.cond_moments(i);
      double acc = d == 1 ? 1.0 : mvt_rect(Vec(-loc), Vec::Constant(d - 1, kInf), scale, df);
      if (acc < 1e-6)
        throw std::runtime_error("tet simulation: truncated-t acceptance below 1e-6");
      mu.push_back(loc);
      chol.push_back(Mat(scale.llt().matrixL()));
    }
  }
  int dim() const { return m.dim(); }

  Vec draw(int i, Rng& rng) const {
    const int d = dim();
    Vec y(d);
    y[i] = 1.0;
    if (d > 1) {
      Vec g(d - 1), x(d - 1);
      for (long long tries = 0;; ++tries) {
        if (tries > 100000000LL)
          throw std::runtime_error("tet simulation: truncated-t rejection stalled");
        for (int j = 0; j < d - 1; ++j) g[j] = rng.normal();
        double w = 2.0 * gamma_draw(0.5 * df, rng);
        x = mu[i] + (chol[i] * g) * std::sqrt(df / w);
        if ((x.array() >= 0.0).all()) break;
      }
      int r = 0;
      for (int j = 0; j < d; ++j)
        if (j != i) y[j] = x[r++];
    }
    Vec w(d);
    for (int j = 0; j < d; ++j) w[j] = m.a[i] * std::pow(y[j], m.nu) / m.a[j];
    return w;
  }
};

// One exact max-stable realization by the extremal-functions sweep.
template <typename Tilted>
Vec maxstable_one(const Tilted& tilted, Rng& rng) {
  const int d = tilted.dim();
  double e0 = rng.exponential();
  double z = 1.0 / e0;
  Vec w = tilted.draw(0, rng);
  Vec out = z * w;
  for (int i = 1; i < d; ++i) {
    e0 = rng.exponential();
    z = 1.0 / e0;
    while (z > out[i]) {
      w = tilted.draw(i, rng);
      bool keep = true;
      for (int j = 0; j < i; ++j)
        if (!(w[j] * z < out[j])) {
          keep = false;
          break;
        }
      if (keep)
        for (int j = 0; j < d; ++j) out[j] = std::max(out[j], w[j] * z);
      e0 += rng.exponential();
      z = 1.0 / e0;
    }
  }
  return out;
}

template <typename Tilted>
Mat maxstable_batch(const Tilted& tilted, int n, std::uint64_t seed) {
  Mat out(n, tilted.dim());
  for (int k = 0; k < n; ++k) {
    auto rng = Rng::substream(seed, static_cast<std::uint64_t>(k));
    out.row(k) = maxstable_one(tilted, rng).transpose();
  }
  return out;
}

// One L1 r-Pareto draw: uniform site, tilted profile, Pareto radius.
template <typename Tilted>
Vec rpareto_l1_one(const Tilted& tilted, Rng& rng) {
  const int d = tilted.dim();
  int i = std::min(d - 1, static_cast<int>(rng.uniform() * d));
  double radius = rng.pareto();
  Vec y = tilted.draw(i, rng);
  return radius / y.sum() * y;
}

template <typename Tilted>
Mat rpareto_l1_batch(const Tilted& tilted, int n, std::uint64_t seed) {
  Mat out(n, tilted.dim());
  for (int k = 0; k < n; ++k) {
    auto rng = Rng::substream(seed, static_cast<std::uint64_t>(k));
    out.row(k) = rpareto_l1_one(tilted, rng).transpose();
  }
  return out;
}

// Rejection from the L1 process: accept(z, proposal_index) decides, and the
// accepted row is scale * z. A pilot guards against near-zero acceptance.
template <typename Tilted, typename Accept>
SimBatch rpareto_reject(const Tilted& tilted, int n, std::uint64_t seed, double scale,
                        Accept&& accept) {
  constexpr long long kPilot = 1000;
  constexpr long long kPilotMax = 200000;
  SimBatch batch;
  batch.samples = Mat(n, tilted.dim());
  batch.seed = seed;
  int got = 0;
  long long idx = 0;
  for (; got < n; ++idx) {
    if (idx >= kPilot && got == 0 && idx >= kPilotMax)
      throw std::runtime_error(
          "rpareto rejection: acceptance rate below 1e-5 after pilot; "
          "review the risk functional and model parameters");
    auto rng = Rng::substream(seed, static_cast<std::uint64_t>(idx));
    Vec z = rpareto_l1_one(tilted, rng);
    if (accept(z)) batch.samples.row(got++) = (scale * z).transpose();
  }
  batch.proposals_used = idx;
  return batch;
}

template <typename Model>
struct TiltedFor;
template <>
struct TiltedFor<BrModel> {
  using type = BrTilted;
  static constexpr const char* tag = "br";
};
template <>
struct TiltedFor<SbrModel> {
  using type = SbrTilted;
  static constexpr const char* tag = "sbr";
};
template <>
struct TiltedFor<TetModel> {
  using type = TetTilted;
  static constexpr const char* tag = "tet";
};

}  // namespace detail

template <typename Model>
SimBatch sample_maxstable(const Model& m, int n, std::uint64_t seed) {
  typename detail::TiltedFor<Model>::type tilted(m);
  SimBatch batch;
  batch.samples = detail::maxstable_batch(tilted, n, seed);
  batch.seed = seed;
  batch.model = detail::TiltedFor<Model>::tag;
  return batch;
}

template <typename Model>
SimBatch sample_rpareto_l1(const Model& m, int n, std::uint64_t seed) {
  typename detail::TiltedFor<Model>::type tilted(m);
  SimBatch batch;
  batch.samples = detail::rpareto_l1_batch(tilted, n, seed);
  batch.seed = seed;
  batch.model = detail::TiltedFor<Model>::tag;
  batch.risk = "l1";
  batch.proposals_used = n;
  return batch;
}

// Convex-risk r-Pareto sampling: c0-scaled L1 draws accepted on r(c0 z) > 1.
template <typename Model>
SimBatch sample_rpareto_convex(const Model& m, const RiskSpec& risk, int n, std::uint64_t seed) {
  typename detail::TiltedFor<Model>::type tilted(m);
  double c0 = risk.c0(m.dim());
  auto batch = detail::rpareto_reject(tilted, n, seed, c0,
                                      [&](const Vec& z) { return risk(c0 * z) > 1.0; });
  batch.model = detail::TiltedFor<Model>::tag;
  batch.risk = risk.tag();
  return batch;
}

// Constant-M baseline: accept z/M from the L1 process when r(z) >= M.
template <typename Model>
SimBatch sample_rpareto_dombry_baseline(const Model& m, const RiskSpec& risk, double big_m, int n,
                                        std::uint64_t seed) {
  if (!(big_m > 0.0)) throw std::domain_error("dombry baseline: M must be positive");
  typename detail::TiltedFor<Model>::type tilted(m);
  auto batch = detail::rpareto_reject(tilted, n, seed, 1.0 / big_m,
                                      [&](const Vec& z) { return risk(z) >= big_m; });
  batch.model = detail::TiltedFor<Model>::tag;
  batch.risk = risk.tag();
  return batch;
}

template <typename Model>
SimBatch sample_rpareto_dombry_baseline(const Model& m, const RiskSpec& risk, int n,
                                        std::uint64_t seed) {
  return sample_rpareto_dombry_baseline(m, risk, risk.dombry_m(m.dim()), n, seed);
}

}  // namespace spext
