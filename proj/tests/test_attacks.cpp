#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "cma/attacks.hpp"
#include "cma/detectors.hpp"
#include "cma/solvers/lp.hpp"

using namespace cma;

namespace {

CompositeChannel link(int n, std::uint64_t seed) {
  RandomStream rs(seed);
  return composite_channel(sample_rayleigh(n, 1, 1, rs), 1e-4, 1.0);
}

double coherent_power(const CompositeChannel& cc) { return std::pow(cc.psi.cwiseAbs().sum(), 2); }

double grid_min(const CompositeChannel& cc, double nu, int levels) {
  const Eigen::Index n = cc.size();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    VecD ph(n);
    for (Eigen::Index k = 0; k < n; ++k) ph(k) = kTwoPi * idx[static_cast<std::size_t>(k)] / levels;
    const double v = cascade_power(steering(ph), cc.psi);
    if (v >= nu) best = std::min(best, v);
    Eigen::Index k = 0;
    while (k < n && ++idx[static_cast<std::size_t>(k)] == levels) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == n) return best;
  }
}

ChannelRealization fixed_state(std::initializer_list<cd> h, std::initializer_list<cd> g) {
  ChannelRealization ch;
  ch.h = CVecD(static_cast<Eigen::Index>(h.size()));
  ch.g = CVecD(static_cast<Eigen::Index>(g.size()));
  Eigen::Index i = 0;
  for (cd v : h) ch.h(i++) = v;
  i = 0;
  for (cd v : g) ch.g(i++) = v;
  return ch;
}

}  // namespace

// ---- fixed-sample attack ---------------------------------------------------

TEST(Ump, TargetVarianceHitsDetectionProbability) {
  for (double rho : {0.05, 0.1, 0.15})
    for (double xi : {0.3, 0.5, 0.9}) {
      const double s2 = target_variance_ump(rho, xi, 50, 2.0);
      EXPECT_NEAR(detection_probability(s2, make_energy_test(50, rho, 2.0)), xi, 1e-9);
      EXPECT_LT(s2, 2.0);
    }
  EXPECT_DOUBLE_EQ(target_variance_ump(0.1, 0.1, 50, 2.0), 2.0);
  EXPECT_THROW(target_variance_ump(0.2, 0.1, 50, 2.0), InfeasibleTarget);
}

TEST(PhaseAttack, MeetsBoundAndIsNearGridOptimum) {
  int close = 0;
  const int cases = 12;
  for (int c = 0; c < cases; ++c) {
    const auto cc = link(4 + 2 * (c % 2), 200 + c);
    const double nu = 0.35 * coherent_power(cc);
    const auto plan = design_phase_attack(cc, nu, 100, RandomStream(300 + c));
    ASSERT_TRUE(plan.feasible);
    EXPECT_GE(plan.achieved_metric, nu * (1 - 1e-9));
    EXPECT_NEAR(plan.achieved_metric, cascade_power(cc, plan.omega), 1e-12 * plan.achieved_metric);
    EXPECT_LE(plan.sdp_lower_bound, plan.achieved_metric * (1 + 1e-9));
    const double grid = grid_min(cc, nu, 16);
    close += plan.achieved_metric <= 1.05 * grid;
  }
  EXPECT_GE(close, cases - 1);
}

TEST(PhaseAttack, UnreachableBoundReportsRange) {
  const auto cc = link(6, 210);
  const auto plan = design_phase_attack(cc, 2 * coherent_power(cc), 20, RandomStream(1));
  EXPECT_FALSE(plan.feasible);
  EXPECT_NEAR(plan.achievable_max, coherent_power(cc), 1e-6 * coherent_power(cc));
}

TEST(PhaseAttack, ZeroBoundDrivesPowerDown) {
  const auto cc = link(16, 220);
  const auto plan = design_phase_attack(cc, 0.0, 100, RandomStream(2));
  ASSERT_TRUE(plan.feasible);
  EXPECT_LT(plan.achieved_metric, 0.05 * cc.psi.squaredNorm());
  EXPECT_GE(estimate_sigma_min(cc, 100, RandomStream(3)), cc.noise_var);
}

TEST(PhaseAttack, Deterministic) {
  const auto cc = link(12, 230);
  const auto a = design_phase_attack(cc, 0.2 * coherent_power(cc), 50, RandomStream(4));
  const auto b = design_phase_attack(cc, 0.2 * coherent_power(cc), 50, RandomStream(4));
  EXPECT_EQ(a.achieved_metric, b.achieved_metric);
  EXPECT_TRUE(a.omega.phases == b.omega.phases);
}

// ---- sequential attack -----------------------------------------------------

TEST(Cusum, ThresholdInversionRoundTrips) {
  for (double a : {0.01, 0.015, 0.02, 0.2})
    for (double smin : {0.05, 0.4}) {
      const double eps = cusum_threshold(a, smin, 1.0);
      EXPECT_NEAR(a_from_threshold(eps, kl_divergence(smin, 1.0)), a, 1e-12);
    }
}

TEST(Cusum, VarianceFloorSolvesInformationEquation) {
  for (double a : {0.01, 0.02})
    for (double tau : {2.0, 50.0, 185.0, 1e6}) {
      const double q = variance_floor_from_arld(a, tau, 3.0);
      EXPECT_LE(q, 3.0);
      EXPECT_NEAR(kl_divergence(q, 3.0), -std::log(a) / tau, 1e-8 * std::max(1.0, -std::log(a) / tau));
    }
  EXPECT_NEAR(variance_floor_from_arld(0.01, 1e12, 3.0), 3.0, 1e-4);
  // Monotone: a longer detection delay forces the variance closer to the reference.
  EXPECT_LT(variance_floor_from_arld(0.01, 50, 1.0), variance_floor_from_arld(0.01, 100, 1.0));
}

TEST(Cusum, PrintedFormResidualIsReported) {
  const double q = variance_floor_from_arld(0.01, 100.0, 1.0);
  EXPECT_TRUE(std::isfinite(arld_l_prime_residual(q, 0.01, 100.0, 1.0)));
  EXPECT_NEAR(arld_l_prime(0.01, 100.0, 1.0), 1.0 * (1 - 0.0 - std::log(0.01) / 100.0), 1e-15);
}

TEST(Cusum, AttackPredictsDelayBound) {
  const auto cc = link(16, 240);
  const double s0 = cc.noise_var + coherent_power(cc);
  const double smin = estimate_sigma_min(cc, 50, RandomStream(5));
  const double eps = cusum_threshold(0.01, smin, s0);
  const auto plan = design_cusum_attack(cc, eps, smin, s0, 100.0, 50, RandomStream(6));
  ASSERT_TRUE(plan.feasible);
  const double s2 = cc.noise_var + plan.achieved_metric;
  EXPECT_GE(-std::log(0.01) / kl_divergence(s2, s0), 100.0 * (1 - 1e-6));
  EXPECT_NEAR(plan.predicted, -std::log(0.01) / kl_divergence(s2, s0), 1e-9 * plan.predicted);
}

// ---- MISO and imperfect CSI ------------------------------------------------

TEST(Miso, SingleAntennaMatchesSiso) {
  RandomStream rs(250);
  const auto ch = sample_rayleigh_miso(8, 1, 1, 1, rs);
  const auto cc = composite_channel_miso(ch, 1e-4, 1.0);
  const double s0 = cc.noise_var + coherent_power(cc);
  const auto m = design_miso_attack(cc, 0.1, 0.5, 50, s0, 50, RandomStream(7));
  const double s2 = target_variance_ump(0.1, 0.5, 50, s0);
  const auto s = design_phase_attack(cc, (s2 - cc.noise_var) / cc.p_tx, 50, RandomStream(7));
  EXPECT_EQ(m.feasible, s.feasible);
  EXPECT_NEAR(m.achieved_metric, s.achieved_metric, 1e-9 * s.achieved_metric);
}

TEST(Miso, MaximizeRecoversCoherentPhasesForSiso) {
  const auto cc = link(10, 260);
  const auto om = maximize_cascade(cc, 50, RandomStream(8));
  EXPECT_NEAR(cascade_power(cc, om), coherent_power(cc), 1e-9 * coherent_power(cc));
}

TEST(Csi, InfeasibleBudget) {
  const auto cc = link(8, 270);
  const auto plan = design_csi_attack(cc, 0.1, 1e-5, 0.01, 1e-4, 8, 20, RandomStream(9));
  EXPECT_FALSE(plan.feasible);
}

TEST(Csi, LooseBudgetMatchesUnconstrainedMinimum) {
  const auto cc = link(8, 280);
  const auto a = design_csi_attack(cc, 1.0, 1e6, 0.0, 1e-4, 8, 50, RandomStream(10));
  const auto b = design_phase_attack(cc, 0.0, 50, RandomStream(10));
  ASSERT_TRUE(a.feasible);
  EXPECT_NEAR(a.achieved_metric, b.achieved_metric, 1e-6 * cc.psi.squaredNorm());
}

TEST(Csi, RespectsUpperBound) {
  const auto cc = link(16, 290);
  const double cmax = coherent_power(cc);
  // Budget that forces the received power to at most a fifth of the coherent value.
  const double r_l = (0.2 * cmax + 16 * 0.01 + 1e-4) / 0.5;
  const auto plan = design_csi_attack(cc, 0.5, r_l, 0.01, 1e-4, 16, 50, RandomStream(11));
  ASSERT_TRUE(plan.feasible);
  EXPECT_LE(plan.achieved_metric, *plan.upper_bound * (1 + 1e-9));
}

// ---- baseline -------------------------------------------------------------

TEST(Baseline, DiscreteBaselineUsesCodebook) {
  RandomStream rs(12);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 2000; ++i) {
    const auto om = random_phase_baseline(10, 2, rs);
    for (Eigen::Index k = 0; k < 10; ++k) {
      const double lvl = om.phases(k) / (kPi / 2);
      ASSERT_NEAR(lvl, std::round(lvl), 1e-12);
      counts[static_cast<std::size_t>(std::lround(lvl)) % 4]++;
    }
  }
  for (int c : counts) EXPECT_NEAR(c, 5000, 300);
}

TEST(Baseline, IncoherentMeanPower) {
  const auto cc = link(64, 300);
  RandomStream rs(13);
  double acc = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) acc += cascade_power(cc, random_phase_baseline(64, std::nullopt, rs));
  EXPECT_NEAR(acc / n / cc.psi.squaredNorm(), 1.0, 0.03);
}

// ---- LP policy attack ------------------------------------------------------

TEST(Lp, ActionDecodingAndSnrTable) {
  RandomStream rs(14);
  std::vector<ChannelRealization> states{sample_rayleigh(3, 1, 1, rs), sample_rayleigh(3, 1, 1, rs)};
  const MatD t = action_snr_table(states, 2, 5.0);
  ASSERT_EQ(t.rows(), 2);
  ASSERT_EQ(t.cols(), 64);
  LpPolicy pol;
  pol.bits = 2;
  pol.n_elements = 3;
  for (int s = 0; s < 2; ++s)
    for (std::uint64_t a = 0; a < 64; ++a)
      EXPECT_NEAR(t(s, static_cast<Eigen::Index>(a)), received_snr(states[s], pol.action(a), 5.0),
                  1e-12 * std::max(1.0, t(s, static_cast<Eigen::Index>(a))));
  EXPECT_EQ(pol.num_actions(), 64u);
}

// One state, actions with SNR 4 (coherent) or 0 (cancelling). A 25% band on
// the first moment forces P(coherent) = 3/4.
TEST(Lp, SingleActiveConstraint) {
  const std::vector<ChannelRealization> states{fixed_state({1.0, 1.0}, {1.0, 1.0})};
  const VecD probs = VecD::Ones(1);
  const auto m = no_attack_moments(states, probs, 1, 1.0);
  EXPECT_DOUBLE_EQ(m.m1, 4.0);
  const auto pol = design_lp_attack(states, probs, 1, m, {0.25, 1.0}, 1.0);
  ASSERT_TRUE(pol.feasible);
  EXPECT_NEAR(pol.moments_achieved.first, 3.0, 1e-9);
  EXPECT_NEAR(pol.rate, 0.75 * std::log2(5.0), 1e-9);
  EXPECT_NEAR(pol.rate_no_attack, std::log2(5.0), 1e-12);
}

TEST(Lp, WideBandsPickMinimumRateActions) {
  RandomStream rs(15);
  std::vector<ChannelRealization> states;
  for (int i = 0; i < 6; ++i) states.push_back(sample_rayleigh(3, 1, 1, rs));
  const VecD probs = VecD::Constant(6, 1.0 / 6);
  const auto m = no_attack_moments(states, probs, 2, 1e4);
  const auto pol = design_lp_attack(states, probs, 2, m, {1e6, 1e6}, 1e4);
  const MatD t = action_snr_table(states, 2, 1e4);
  double want = 0;
  for (int s = 0; s < 6; ++s) want += std::log2(1 + t.row(s).minCoeff()) / 6;
  ASSERT_TRUE(pol.feasible);
  EXPECT_NEAR(pol.rate, want, 1e-9);
}

// Column generation against the explicit LP over every (state, action) pair.
TEST(Lp, ColumnGenerationMatchesFullLp) {
  RandomStream rs(16);
  const int ns = 5, bits = 1, n = 3;
  std::vector<ChannelRealization> states;
  for (int i = 0; i < ns; ++i) states.push_back(sample_rayleigh(n, 1, 1, rs));
  VecD probs(ns);
  for (int i = 0; i < ns; ++i) probs(i) = 1.0 + i;
  probs /= probs.sum();
  const double kappa = 10.0;
  const auto m = no_attack_moments(states, probs, bits, kappa);
  const MatD t = action_snr_table(states, bits, kappa);
  const Eigen::Index na = t.cols();

  for (double z : {0.1, 0.3}) {
    solvers::LpProblem lp;
    lp.c = VecD(ns * na);
    MatD Aeq = MatD::Zero(ns, ns * na), Aub = MatD::Zero(4, ns * na);
    for (int s = 0; s < ns; ++s)
      for (Eigen::Index a = 0; a < na; ++a) {
        const Eigen::Index j = s * na + a;
        const double snr = t(s, a);
        lp.c(j) = probs(s) * std::log2(1 + snr);
        Aeq(s, j) = 1.0;
        Aub(0, j) = probs(s) * snr;
        Aub(1, j) = -probs(s) * snr;
        Aub(2, j) = probs(s) * snr * snr;
        Aub(3, j) = -probs(s) * snr * snr;
      }
    lp.A_eq = Aeq.sparseView();
    lp.b_eq = VecD::Ones(ns);
    lp.A_ub = Aub.sparseView();
    lp.b_ub = VecD(4);
    lp.b_ub << m.m1 * (1 + z), -m.m1 * (1 - z), m.m2 * (1 + z), -m.m2 * (1 - z);
    const auto full = solvers::solve_lp(lp);
    ASSERT_TRUE(full.optimal());

    const auto pol = design_lp_attack(states, probs, bits, m, {z, z}, kappa);
    ASSERT_TRUE(pol.feasible);
    EXPECT_NEAR(pol.rate, full.objective, 1e-8);
    // Re-verified moments stay inside the bands.
    EXPECT_LE(std::abs(pol.moments_achieved.first - m.m1), z * m.m1 * (1 + 1e-9));
    EXPECT_LE(std::abs(pol.moments_achieved.second - m.m2), z * m.m2 * (1 + 1e-9));
    // Rows are probability vectors.
    for (int s = 0; s < ns; ++s) {
      double row = 0;
      for (decltype(pol.probs)::InnerIterator it(pol.probs, s); it; ++it) {
        EXPECT_GE(it.value(), 0.0);
        row += it.value();
      }
      EXPECT_NEAR(row, 1.0, 1e-12);
    }
  }
}

TEST(Lp, RejectsHugeActionSpace) {
  RandomStream rs(17);
  const std::vector<ChannelRealization> states{sample_rayleigh(20, 1, 1, rs)};
  EXPECT_THROW(no_attack_moments(states, VecD::Ones(1), 2, 1.0), std::invalid_argument);
}
