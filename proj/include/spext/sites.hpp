#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spext/mvn.hpp"

namespace spext {

// Planar observation locations. Duplicates are rejected because they make the
// induced covariance matrices singular.
struct SiteSet {
  Mat coords;  // D x 2
  std::vector<std::string> ids;

  explicit SiteSet(Mat coords_, std::vector<std::string> ids_ = {})
      : coords(std::move(coords_)), ids(std::move(ids_)) {
    if (coords.cols() != 2 || coords.rows() < 1)
      throw std::domain_error("SiteSet: coords must be a D x 2 matrix with D >= 1");
    if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != coords.rows())
      throw std::domain_error("SiteSet: id count does not match site count");
    for (Eigen::Index i = 0; i < coords.rows(); ++i)
      for (Eigen::Index j = i + 1; j < coords.rows(); ++j)
        if ((coords.row(i) - coords.row(j)).norm() < 1e-12)
          throw std::domain_error("SiteSet: duplicate coordinates at rows " + std::to_string(i) +
                                  " and " + std::to_string(j));
    if (ids.empty()) {
      ids.reserve(coords.rows());
      for (Eigen::Index i = 0; i < coords.rows(); ++i) ids.push_back("s" + std::to_string(i + 1));
    }
  }

  int dim() const { return static_cast<int>(coords.rows()); }
};

// Regular n x n grid on [lo, hi]^2.
inline SiteSet grid_sites(int n, double lo, double hi) {
  if (n < 1) throw std::domain_error("grid_sites: n >= 1");
  Mat c(n * n, 2);
  double step = n > 1 ? (hi - lo) / (n - 1) : 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      c(i * n + j, 0) = lo + step * j;
      c(i * n + j, 1) = lo + step * i;
    }
  return SiteSet(std::move(c));
}

}  // namespace spext
