#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "cma/special.hpp"
#include "cma/statdist.hpp"

namespace sp = cma::special;

TEST(Chi2, TwoDofClosedForm) {
  for (int i = 1; i <= 99; ++i) {
    const double rho = i / 100.0;
    EXPECT_NEAR(cma::chi2_inv(rho, 2), -2.0 * std::log(1.0 - rho), 1e-10) << rho;
  }
}

// Boost's chi-square is an independent implementation of the same law.
TEST(Chi2, CdfMatchesBoost) {
  for (int dof : {1, 2, 3, 7, 20, 100, 200}) {
    boost::math::chi_squared_distribution<double> d(dof);
    for (double x : {0.01, 0.5, 1.0, 3.0, 10.0, 50.0, 150.0, 250.0})
      EXPECT_NEAR(cma::chi2_cdf(x, dof), boost::math::cdf(d, x), 1e-12) << dof << " " << x;
  }
}

TEST(Chi2, InverseMatchesBoostAndRoundTrips) {
  for (int dof = 1; dof <= 200; dof += (dof < 10 ? 1 : 13)) {
    boost::math::chi_squared_distribution<double> d(dof);
    for (double p : {1e-6, 0.001, 0.05, 0.3, 0.5, 0.9, 0.999}) {
      const double x = cma::chi2_inv(p, dof);
      EXPECT_NEAR(cma::chi2_cdf(x, dof), p, 1e-8);
      EXPECT_NEAR(x, boost::math::quantile(d, p), 1e-8 * std::max(1.0, x));
    }
  }
}

TEST(Chi2, InverseIsMonotone) {
  double prev = 0.0;
  for (int i = 1; i < 200; ++i) {
    const double x = cma::chi2_inv(i / 200.0, 100);
    EXPECT_GT(x, prev);
    prev = x;
  }
}

TEST(Chi2, RejectsBadArguments) {
  EXPECT_THROW(cma::chi2_inv(0.0, 3), std::invalid_argument);
  EXPECT_THROW(cma::chi2_inv(1.0, 3), std::invalid_argument);
  EXPECT_THROW(cma::chi2_inv(0.5, 0), std::invalid_argument);
  EXPECT_THROW(cma::chi2_cdf(-1.0, 3), std::invalid_argument);
}

TEST(Chi2, QuantileStruct) {
  const auto q = cma::chi2_quantile(0.05, 100);
  EXPECT_EQ(q.dof, 100);
  EXPECT_DOUBLE_EQ(q.prob, 0.05);
  EXPECT_NEAR(q.value, 77.92946516501, 1e-8);
}

TEST(Gamma, IncompleteMatchesBoost) {
  for (double a : {0.3, 1.0, 2.5, 10.0, 75.0})
    for (double x : {0.1, 1.0, 5.0, 20.0, 90.0}) {
      EXPECT_NEAR(sp::gamma_p(a, x), boost::math::gamma_p(a, x), 1e-13);
      const double q = boost::math::gamma_q(a, x);
      EXPECT_NEAR(sp::gamma_q(a, x), q, 1e-13 + 1e-10 * q);
    }
}

TEST(Normal, QuantileMatchesBoost) {
  boost::math::normal_distribution<double> n;
  for (double p : {1e-10, 1e-4, 0.01, 0.2, 0.5, 0.77, 0.99, 1 - 1e-9})
    EXPECT_NEAR(sp::normal_quantile(p), boost::math::quantile(n, p), 1e-9);
}

TEST(Kolmogorov, SurvivalKnownValues) {
  // Tabulated critical values of the limiting distribution.
  EXPECT_NEAR(sp::kolmogorov_sf(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(sp::kolmogorov_sf(1.6276), 0.01, 1e-4);
  EXPECT_NEAR(sp::kolmogorov_sf(1.2238), 0.10, 1e-4);
  EXPECT_DOUBLE_EQ(sp::kolmogorov_sf(0.0), 1.0);
  EXPECT_LT(sp::kolmogorov_sf(5.0), 1e-20);
}

TEST(Kolmogorov, PValueDecreasesWithDistance) {
  double prev = 1.0;
  for (double d = 0.001; d < 0.1; d += 0.005) {
    const double p = sp::ks_pvalue(d, 1000);
    EXPECT_LE(p, prev);
    prev = p;
  }
}
