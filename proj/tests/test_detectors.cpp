#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <memory>
#include <vector>

#include "cma/detectors.hpp"
#include "cma/rng.hpp"
#include "cma/special.hpp"

using namespace cma;

namespace {

CVecD block(RandomStream& rs, int K, double var) {
  CVecD y(K);
  for (int i = 0; i < K; ++i) y(i) = rs.complex_normal(var);
  return y;
}

}  // namespace

TEST(Energy, ThresholdScalesWithReference) {
  const double t1 = energy_threshold(50, 0.05, 1.0);
  EXPECT_NEAR(energy_threshold(50, 0.05, 3.0), 3.0 * t1, 1e-12 * t1);
  EXPECT_NEAR(2 * t1, chi2_inv(0.05, 100), 1e-12);
  EXPECT_THROW(energy_threshold(0, 0.05, 1.0), std::invalid_argument);
  EXPECT_THROW(energy_threshold(5, 1.0, 1.0), std::invalid_argument);
}

TEST(Energy, DetectionProbabilityAtReferenceIsFalseAlarmRate) {
  const auto t = make_energy_test(50, 0.1, 2.5);
  EXPECT_NEAR(detection_probability(2.5, t), 0.1, 1e-10);
  EXPECT_GT(detection_probability(1.0, t), 0.1);
  EXPECT_LT(detection_probability(4.0, t), 0.1);
}

TEST(Energy, TiesGoToAttack) {
  EnergyTest t{2, 0.1, 1.0, 2.0};
  CVecD y(2);
  y << cd(1, 0), cd(0, 1);
  EXPECT_TRUE(energy_detect(y, t).alarm());
  y(0) = cd(1.01, 0);
  EXPECT_FALSE(energy_detect(y, t).alarm());
}

// 2W / sigma^2 follows chi-square with 2K degrees of freedom; checked with a
// KS test against Boost's CDF.
TEST(Energy, StatisticLaw) {
  RandomStream rs(41);
  const int K = 50, n = 5000;
  const double var = 0.37;
  std::vector<double> x(n);
  for (auto& v : x) v = 2.0 * energy_statistic(block(rs, K, var)) / var;
  std::sort(x.begin(), x.end());
  boost::math::chi_squared_distribution<double> law(2 * K);
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = boost::math::cdf(law, x[i]);
    d = std::max({d, (i + 1.0) / n - f, f - double(i) / n});
  }
  EXPECT_GT(special::ks_pvalue(d, n), 0.01);
}

TEST(Energy, EmpiricalRatesMatchTheory) {
  RandomStream rs(42);
  const int K = 50, n = 20000;
  const auto t = make_energy_test(K, 0.1, 1.0);
  int fa = 0, det = 0;
  for (int i = 0; i < n; ++i) {
    fa += energy_detect(block(rs, K, 1.0), t).alarm();
    det += energy_detect(block(rs, K, 0.8), t).alarm();
  }
  const double pd = detection_probability(0.8, t);
  EXPECT_NEAR(fa / double(n), 0.1, 4 * std::sqrt(0.09 / n));
  EXPECT_NEAR(det / double(n), pd, 4 * std::sqrt(pd * (1 - pd) / n));
}

// The clamped window MLE maximizes the window likelihood ratio.
TEST(Cusum, WindowMleMatchesGridSearch) {
  RandomStream rs(43);
  for (int trial = 0; trial < 100; ++trial) {
    const double s0 = 1.0, smin = rs.uniform(0.05, 0.9);
    const std::int64_t count = 1 + static_cast<std::int64_t>(rs.below(60));
    const double energy = count * rs.uniform(0.0, 1.5);
    const double mle = GlrCusum::window_mle(energy, count, smin, s0);
    // Exhaustive grid over the admissible variances.
    double best = -1e300, arg = smin;
    const int grid = 20000;
    for (int i = 0; i <= grid; ++i) {
      const double s = smin + (s0 - smin) * i / grid;
      const double v = GlrCusum::window_llr(energy, count, s, s0);
      if (v > best) best = v, arg = s;
    }
    EXPECT_NEAR(mle, arg, (s0 - smin) / grid + 1e-12);
    EXPECT_GE(GlrCusum::window_llr(energy, count, mle, s0), best - 1e-9);
  }
}

TEST(Cusum, StatisticMatchesBruteForce) {
  RandomStream rs(44);
  const double s0 = 1.0, smin = 0.2;
  const int window = 12;
  GlrCusum det(s0, smin, 1e9, window);
  std::vector<double> e;
  for (int t = 0; t < 60; ++t) {
    const cd y = rs.complex_normal(t < 30 ? 1.0 : 0.3);
    e.push_back(std::norm(y));
    det.step(y);
    double best = 0.0;
    for (int k = std::max(0, t + 1 - window); k <= t; ++k) {
      double en = 0.0;
      for (int i = k; i <= t; ++i) en += e[i];
      const std::int64_t c = t - k + 1;
      for (int g = 0; g <= 400; ++g) {
        const double s = smin + (s0 - smin) * g / 400.0;
        best = std::max(best, GlrCusum::window_llr(en, c, s, s0));
      }
    }
    EXPECT_GE(det.statistic(), best - 1e-12);
    EXPECT_NEAR(det.statistic(), best, 1e-2 * std::max(1.0, best));
  }
}

TEST(Cusum, AlarmTimeIsSticky) {
  GlrCusum det(1.0, 0.1, 2.0, 10);
  RandomStream rs(45);
  std::optional<std::int64_t> first;
  for (int t = 0; t < 200; ++t) {
    const auto out = det.step(rs.complex_normal(0.1));
    if (out.alarm() && !first) first = det.time();
  }
  ASSERT_TRUE(first.has_value());
  EXPECT_EQ(det.alarm_time(), first);
  det.reset();
  EXPECT_FALSE(det.alarm_time().has_value());
  EXPECT_EQ(det.time(), 0);
}

TEST(Cusum, ThresholdFormula) {
  const double a = 0.01, smin = 0.3, s0 = 1.0;
  const double info = -std::log(smin) + smin - 1.0;
  const double b = 3 * std::log(1 / a) * std::pow(1 + 1 / info, 2);
  EXPECT_NEAR(cusum_threshold(a, smin, s0), -std::log(a / b), 1e-12);
  EXPECT_THROW(cusum_threshold(0.6, smin, s0), std::invalid_argument);
}

TEST(Cusum, FalseAlarmRunLengthBound) {
  const double a = 0.02, s0 = 1.0, smin = 0.2;
  const double eps = cusum_threshold(a, smin, s0);
  const int streams = 200, cap = 2000;
  RandomStream root(46);
  double total = 0.0;
  for (int i = 0; i < streams; ++i) {
    RandomStream rs = root.substream(static_cast<std::uint64_t>(i));
    GlrCusum det(s0, smin, eps, 50);
    int t = 0;
    while (t < cap && !det.step(rs.complex_normal(s0)).alarm()) ++t;
    total += t;
  }
  EXPECT_GE(total / streams, 1.0 / a);
}

TEST(Moment, DetectsEitherDeviation) {
  MomentDetector d{10.0, 120.0, 2.0, 30.0, 3};
  EXPECT_FALSE(moment_detect({9.0, 10.0, 11.0}, d).alarm());
  EXPECT_TRUE(moment_detect({6.0, 8.0, 10.0}, d).alarm());
  EXPECT_TRUE(moment_detect({1.0, 10.0, 19.0}, d).alarm());
  EXPECT_THROW(moment_detect({1.0}, d), std::invalid_argument);
}

TEST(Moment, BlockSnrEstimate) {
  CVecD y(2);
  y << cd(2, 0), cd(0, 2);
  EXPECT_DOUBLE_EQ(estimate_block_snr(y, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(estimate_block_snr(y, 10.0), 0.0);
}

TEST(DoubleThreshold, RootsSolveQuadratic) {
  auto F0 = std::make_shared<const CsiEnergyDist>(1.0, 0.5);
  for (double eps : {0.0, 0.01, 0.02, 0.04})
    for (int K : {2, 50, 100}) {
      const double iota = 0.23;
      if (eps > max_eps_ks(K, iota)) continue;
      const auto t = double_thresholds(K, iota, eps, F0);
      const double c = (K - 1) * eps * iota * iota;
      EXPECT_NEAR(t.z_l * t.z_l - t.z_l + c, 0.0, 1e-15);
      EXPECT_NEAR(t.z_u * t.z_u - t.z_u + c, 0.0, 1e-15);
      EXPECT_NEAR(t.z_l + t.z_u, 1.0, 1e-15);
      if (t.z_l > 0) EXPECT_NEAR(F0->cdf(t.r_l), t.z_l, 1e-9);
    }
  EXPECT_THROW(double_thresholds(100, 0.23, 1.0, F0), std::invalid_argument);
}

TEST(DoubleThreshold, FlagsSamplesOutsideBand) {
  auto F0 = std::make_shared<const CsiEnergyDist>(1.0, 0.0);
  const auto t = double_thresholds(100, 0.23, 0.02, F0);
  EXPECT_FALSE(double_threshold_detect({1.0, 0.5, 2.0}, t).alarm());
  EXPECT_TRUE(double_threshold_detect({1.0, t.r_l * 0.5}, t).alarm());
  EXPECT_TRUE(double_threshold_detect({t.r_u * 2.0}, t).alarm());
}

TEST(Ks, StatisticOfPerfectQuantiles) {
  const CsiEnergyDist F0(1.0, 0.0);
  std::vector<double> x;
  const int n = 100;
  for (int i = 0; i < n; ++i) x.push_back(F0.inv_cdf((i + 0.5) / n));
  EXPECT_NEAR(ks_statistic(x, F0), 0.5 / n, 1e-8);
}
