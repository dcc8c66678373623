#pragma once

// Derivative-free Nelder-Mead simplex minimizer.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "spext/mvn.hpp"

namespace spext {

struct NmOptions {
  int max_iter = 2000;
  double ftol = 1e-9;
  double xtol = 1e-8;
  double step = 0.25;  // initial simplex edge in each coordinate
};

struct NmResult {
  Vec x;
  double fval = kInf;
  int iterations = 0;
  bool converged = false;
};

template <typename F>
NmResult nelder_mead(F&& f, const Vec& x0, const NmOptions& opt = NmOptions()) {
  const int n = static_cast<int>(x0.size());
  std::vector<Vec> pts(n + 1, x0);
  std::vector<double> val(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1][i] += opt.step;
  for (int i = 0; i <= n; ++i) val[i] = f(pts[i]);

  std::vector<int> order(n + 1);
  NmResult res;
  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return val[a] < val[b]; });
    int lo = order[0], hi = order[n], nh = order[n - 1];
    double spread = std::fabs(val[hi] - val[lo]);
    double width = 0.0;
    for (int i = 1; i <= n; ++i)
      width = std::max(width, (pts[order[i]] - pts[lo]).cwiseAbs().maxCoeff());
    if (spread < opt.ftol && width < opt.xtol) {
      res.converged = true;
      break;
    }
    Vec centroid = Vec::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != hi) centroid += pts[i];
    centroid /= n;

    Vec xr = centroid + (centroid - pts[hi]);
    double fr = f(xr);
    if (fr < val[lo]) {
      Vec xe = centroid + 2.0 * (centroid - pts[hi]);
      double fe = f(xe);
      if (fe < fr) {
        pts[hi] = xe;
        val[hi] = fe;
      } else {
        pts[hi] = xr;
        val[hi] = fr;
      }
    } else if (fr < val[nh]) {
      pts[hi] = xr;
      val[hi] = fr;
    } else {
      Vec xc = centroid + 0.5 * (pts[hi] - centroid);
      double fc = f(xc);
      if (fc < val[hi]) {
        pts[hi] = xc;
        val[hi] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == lo) continue;
          pts[i] = pts[lo] + 0.5 * (pts[i] - pts[lo]);
          val[i] = f(pts[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (val[i] < val[best]) best = i;
  res.x = pts[best];
  res.fval = val[best];
  return res;
}

}  // namespace spext
