#pragma once

// Empirical marginal transforms to unit Frechet / unit Pareto scale and the
// type-7 empirical quantile used for thresholding.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "spext/mvn.hpp"

namespace spext {

enum class Margins { Raw, Frechet, Pareto };
enum class ZeroPolicy { Missing, Keep };

struct ObservationSet {
  Mat values;  // NaN marks missing entries
  Margins margins = Margins::Raw;
};

// Type-7 quantile (linear interpolation between order statistics).
inline double quantile_type7(std::vector<double> v, double q) {
  if (v.empty()) throw std::domain_error("quantile_type7: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("quantile_type7: q in [0,1]");
  std::sort(v.begin(), v.end());
  double h = (v.size() - 1) * q;
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

namespace detail {

// Average ranks (1-based) of the finite entries, ties averaged.
inline void average_ranks(const std::vector<std::pair<double, int>>& sorted, std::vector<double>& rank) {
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1].first == sorted[i].first) ++j;
    double avg = 0.5 * (i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[sorted[k].second] = avg;
    i = j + 1;
  }
}

}  // namespace detail

inline ObservationSet marginal_transform(const ObservationSet& data, Margins target,
                                         ZeroPolicy zeros = ZeroPolicy::Missing) {
  if (data.margins != Margins::Raw)
    throw std::domain_error("marginal_transform: input must be on the raw scale");
  if (target == Margins::Raw) throw std::domain_error("marginal_transform: target must be a tail scale");
  const int n = static_cast<int>(data.values.rows());
  const int d = static_cast<int>(data.values.cols());
  ObservationSet out;
  out.values = Mat::Constant(n, d, std::nan(""));
  out.margins = target;
  for (int j = 0; j < d; ++j) {
    std::vector<std::pair<double, int>> obs;
    obs.reserve(n);
    for (int i = 0; i < n; ++i) {
      double x = data.values(i, j);
      if (std::isnan(x)) continue;
      if (x == 0.0 && zeros == ZeroPolicy::Missing) continue;
      obs.emplace_back(x, i);
    }
    if (obs.empty())
      throw std::runtime_error("marginal_transform: no usable values in a column");
    std::sort(obs.begin(), obs.end());
    std::vector<double> rank(n, 0.0);
    detail::average_ranks(obs, rank);
    double np1 = static_cast<double>(obs.size()) + 1.0;
    for (const auto& [x, i] : obs) {
      double r = rank[i];
      out.values(i, j) = target == Margins::Frechet ? -1.0 / std::log(r / np1) : np1 / (np1 - r);
    }
  }
  return out;
}

}  // namespace spext
