#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "cma/rng.hpp"

using cma::RandomStream;

TEST(RandomStream, SameSeedSameSequence) {
  RandomStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(RandomStream, StreamsAndSeedsDiffer) {
  RandomStream a(42, 7), b(42, 8), c(43, 7);
  int same_b = 0, same_c = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    same_b += x == b();
    same_c += x == c();
  }
  EXPECT_EQ(same_b, 0);
  EXPECT_EQ(same_c, 0);
}

TEST(RandomStream, SubstreamIgnoresParentCounter) {
  RandomStream a(5), b(5);
  for (int i = 0; i < 17; ++i) (void)a();
  RandomStream sa = a.substream(3), sb = b.substream(3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(sa(), sb());
  EXPECT_NE(a.substream(3).key(), a.substream(4).key());
}

TEST(RandomStream, SubstreamKeysAreDistinct) {
  RandomStream root(1);
  std::set<std::uint64_t> keys;
  for (std::uint64_t i = 0; i < 10000; ++i) keys.insert(root.substream(i).key());
  EXPECT_EQ(keys.size(), 10000u);
}

TEST(RandomStream, UniformMoments) {
  RandomStream r(9);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12, 2e-3);
}

TEST(RandomStream, BelowIsUnbiased) {
  RandomStream r(10);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) counts[r.below(7)]++;
  // Chi-square with 6 dof; 22.46 is the 0.999 quantile.
  double chi = 0;
  for (int c : counts) chi += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  EXPECT_LT(chi, 22.46);
}

TEST(RandomStream, NormalAndComplexNormalVariance) {
  RandomStream r(11);
  const int n = 200000;
  double s = 0, s2 = 0, c2 = 0, cre = 0, cim = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
    const auto z = r.complex_normal(3.0);
    c2 += std::norm(z);
    cre += z.real() * z.real();
    cim += z.imag() * z.imag();
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  EXPECT_NEAR(c2 / n, 3.0, 0.03);
  // Circular: variance splits evenly between the parts.
  EXPECT_NEAR(cre / n, 1.5, 0.02);
  EXPECT_NEAR(cim / n, 1.5, 0.02);
}
