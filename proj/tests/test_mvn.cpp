#include <catch2/catch_amalgamated.hpp>

#include "spext/mvn.hpp"

using namespace spext;

namespace {

Mat equicorr(int d, double rho) {
  Mat s = Mat::Constant(d, d, rho);
  s.diagonal().setOnes();
  return s;
}

}  // namespace

TEST_CASE("bivariate normal orthant probability") {
  // P(X>0, Y>0) = 1/4 + asin(rho) / (2 pi)
  for (double rho : {-0.9, -0.5, 0.0, 0.3, 0.5, 0.95}) {
    double ref = 0.25 + std::asin(rho) / (2.0 * M_PI);
    CHECK(bvn_upper(0.0, 0.0, rho) == Catch::Approx(ref).margin(1e-13));
  }
  // The value 1/3 at rho = 1/2.
  Vec lo(2), hi(2);
  lo << 0.0, 0.0;
  hi << kInf, kInf;
  CHECK(mvn_rect(lo, hi, equicorr(2, 0.5)) == Catch::Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("bivariate normal against univariate reductions") {
  CHECK(bvn_cdf(0.7, kInf, 0.4) == Catch::Approx(norm_cdf(0.7)).margin(1e-14));
  CHECK(bvn_cdf(-1.2, 30.0, -0.8) == Catch::Approx(norm_cdf(-1.2)).margin(1e-12));
  // Perfect correlation collapses to the minimum.
  CHECK(bvn_cdf(0.3, 1.1, 1.0) == Catch::Approx(norm_cdf(0.3)).margin(1e-14));
  CHECK(bvn_cdf(0.5, -0.2, -1.0) ==
        Catch::Approx(std::max(0.0, norm_cdf(0.5) + norm_cdf(-0.2) - 1.0)).margin(1e-14));
}

TEST_CASE("independent rectangles factorize in every dimension path") {
  for (int d : {1, 2, 3, 5}) {
    Vec lo = Vec::Constant(d, -0.7);
    Vec hi = Vec::Constant(d, 1.3);
    double ref = std::pow(norm_cdf(1.3) - norm_cdf(-0.7), d);
    double tol = d <= 3 ? 1e-10 : 3e-6;
    CHECK(mvn_rect(lo, hi, Mat::Identity(d, d)) == Catch::Approx(ref).margin(tol));
  }
}

TEST_CASE("equicorrelated orthant probabilities at rho one half") {
  // With rho = 1/2 the orthant probability is 1/(d+1).
  for (int d : {2, 3, 4, 5, 8}) {
    Vec lo = Vec::Zero(d);
    Vec hi = Vec::Constant(d, kInf);
    double tol = d <= 3 ? 1e-9 : (d <= 5 ? 5e-6 : 2e-5);
    CHECK(mvn_rect(lo, hi, equicorr(d, 0.5)) == Catch::Approx(1.0 / (d + 1.0)).margin(tol));
  }
}

TEST_CASE("trivariate path agrees with the quasi Monte Carlo path") {
  Mat s(3, 3);
  s << 2.0, 0.6, -0.3, 0.6, 1.0, 0.4, -0.3, 0.4, 1.5;
  Vec lo(3), hi(3);
  lo << -1.0, -kInf, -0.5;
  hi << 0.8, 1.2, 2.0;
  double exact = mvn_rect(lo, hi, s);
  // Embed as a four dimensional problem with a slack coordinate.
  Mat s4 = Mat::Identity(4, 4);
  s4.topLeftCorner(3, 3) = s;
  Vec lo4(4), hi4(4);
  lo4 << lo, -kInf;
  hi4 << hi, kInf;
  CHECK(mvn_rect(lo4, hi4, s4) == Catch::Approx(exact).margin(5e-6));
}

TEST_CASE("general covariance scales correctly") {
  Vec lo(2), hi(2);
  lo << -kInf, -kInf;
  hi << 2.0, 3.0;
  Mat s(2, 2);
  s << 4.0, 3.0, 3.0, 9.0;  // sd 2 and 3, corr 0.5
  CHECK(mvn_cdf(hi, s) == Catch::Approx(bvn_cdf(1.0, 1.0, 0.5)).margin(1e-13));
}

TEST_CASE("multivariate t orthants match the normal ones") {
  // Orthant probabilities of elliptical laws depend only on the correlation.
  for (int d : {2, 3, 5}) {
    Vec lo = Vec::Zero(d);
    Vec hi = Vec::Constant(d, kInf);
    double tol = d <= 3 ? 1e-8 : 1e-5;
    CHECK(mvt_rect(lo, hi, equicorr(d, 0.5), 4.0) ==
          Catch::Approx(1.0 / (d + 1.0)).margin(tol));
  }
}

TEST_CASE("multivariate t reductions") {
  Vec lo1(1), hi1(1);
  lo1 << -kInf;
  hi1 << kSqrt2;
  Mat s1 = Mat::Identity(1, 1);
  CHECK(mvt_rect(lo1, hi1, s1, 2.0) == Catch::Approx(0.8535533905932737).epsilon(1e-12));

  // Large degrees of freedom recover the normal.
  Mat s(2, 2);
  s << 1.0, 0.4, 0.4, 1.0;
  Vec lo(2), hi(2);
  lo << -0.5, -1.0;
  hi << 1.5, 0.7;
  double tn = mvt_rect(lo, hi, s, 1e7);
  double nn = mvn_rect(lo, hi, s);
  CHECK(tn == Catch::Approx(nn).margin(2e-7));

  // Marginalizing an unbounded coordinate drops the dimension.
  Mat s3 = Mat::Identity(3, 3);
  s3(0, 1) = s3(1, 0) = 0.4;
  Vec lo3(3), hi3(3);
  lo3 << -0.5, -1.0, -kInf;
  hi3 << 1.5, 0.7, kInf;
  CHECK(mvt_rect(lo3, hi3, s3, 5.0) ==
        Catch::Approx(mvt_rect(lo, hi, s, 5.0)).margin(1e-8));
}

TEST_CASE("deterministic repeat evaluations") {
  Vec lo = Vec::Constant(6, -0.4);
  Vec hi = Vec::Constant(6, 2.1);
  Mat s = equicorr(6, 0.3);
  double a = mvn_rect(lo, hi, s);
  double b = mvn_rect(lo, hi, s);
  CHECK(a == b);
}
