#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "cma/channel.hpp"
#include "cma/rng.hpp"
#include "cma/solvers/sdp.hpp"
#include "cma/statdist.hpp"

namespace cma {

struct AttackPlan {
  PhaseVector omega;
  // |s^H psi|^2 re-evaluated from the returned phases (or the policy objective).
  double achieved_metric = std::numeric_limits<double>::quiet_NaN();
  // Lower bound on |s^H psi|^2, or the upper bound for the imperfect-CSI attack.
  double target_bound = 0.0;
  std::optional<double> upper_bound;
  // Detector-specific prediction: P_D, ARLD lower bound, or rate.
  double predicted = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;

  // Diagnostics.
  solvers::SdpStatus sdp_status = solvers::SdpStatus::MaxIter;
  double sdp_objective = std::numeric_limits<double>::quiet_NaN();
  double sdp_lower_bound = std::numeric_limits<double>::quiet_NaN();
  double achievable_min = std::numeric_limits<double>::quiet_NaN();
  double achievable_max = std::numeric_limits<double>::quiet_NaN();
  std::size_t feasible_candidates = 0;
  std::string note;
};

// sigma^2 = R_{2K,rho} sigma02 / R_{2K,xi}; throws InfeasibleTarget for xi < rho.
double target_variance_ump(double rho, double xi, int K, double sigma02);

// min |s^H psi|^2 s.t. nu <= |s^H psi|^2 (<= upper_nu) by semidefinite
// relaxation and Gaussian randomization. An unreachable bound yields a plan
// with feasible = false and the achievable range filled in.
AttackPlan design_phase_attack(const CompositeChannel& cc, double nu, int trials, const RandomStream& rng,
                               std::optional<double> upper_nu = std::nullopt);

// Root a in (0, a_max] of ln(a)/a = -e^epsilon / (3 (1 + 1/kl_min)^2).
double a_from_threshold(double epsilon, double kl_min, double a_max = 0.5);

// Q' in (0, sigma02] with I(Q') = -ln(a) / tau_arld.
double variance_floor_from_arld(double a, double tau_arld, double sigma02);

// L' = sigma02 (1 - ln sigma02 - ln(a) / tau_arld) and the residual
// q - sigma02 ln q - L' of the printed form at q.
double arld_l_prime(double a, double tau_arld, double sigma02);
double arld_l_prime_residual(double q, double a, double tau_arld, double sigma02);

AttackPlan design_cusum_attack(const CompositeChannel& cc, double epsilon, double sigma_min2, double sigma02,
                               double tau_arld, int trials, const RandomStream& rng);

// Joint-beamforming attack: psi is N x M, the objective is ||s^H psi||^2.
AttackPlan design_miso_attack(const CompositeChannel& cc, double rho, double xi, int K, double sigma_j02, int trials,
                              const RandomStream& rng);

// Imperfect-CSI attack: min |s^H psi_hat|^2 subject to
// P |s^H psi_hat|^2 + P N sigma_e2 + sigma_w2 <= nu_ks r_l (and optionally >= nu_tilde).
AttackPlan design_csi_attack(const CompositeChannel& psi_hat, double nu_ks, double r_l, double sigma_e2,
                             double sigma_w2, int n, int trials, const RandomStream& rng,
                             std::optional<double> nu_tilde = std::nullopt);

PhaseVector random_phase_baseline(Eigen::Index n, std::optional<int> bits, RandomStream& rng);

// sigma_w^2 + P min |s^H psi|^2 over phases, found by the nu = 0 attack.
double estimate_sigma_min(const CompositeChannel& cc, int trials, const RandomStream& rng);

// Best phases for max ||s^H psi||^2 by the same relaxation (the legitimate
// MISO configuration; for SISO this recovers the coherent phases).
PhaseVector maximize_cascade(const CompositeChannel& cc, int trials, const RandomStream& rng);

// ---- LP policy attack over fading blocks -------------------------------------

struct LpPolicy {
  std::vector<ChannelRealization> states;
  VecD state_probs;
  int bits = 2;
  Eigen::Index n_elements = 0;
  // Row-stochastic n x M^N matrix p(a | s), stored sparsely.
  Eigen::SparseMatrix<double, Eigen::RowMajor> probs;
  std::pair<double, double> moments_achieved{0.0, 0.0};
  std::pair<double, double> moments_reference{0.0, 0.0};
  std::pair<double, double> zeta{0.0, 0.0};
  // Expected log2(1 + SNR) under the policy and under the no-attack phases.
  double rate = 0.0;
  double rate_no_attack = 0.0;
  bool feasible = false;
  // Smallest extra slack on the moment bands that made the LP feasible (0 when feasible).
  double min_extra_zeta = 0.0;
  int lp_iterations = 0;
  int pricing_rounds = 0;

  std::size_t num_actions() const { return static_cast<std::size_t>(1) << (bits * n_elements); }
  PhaseVector action(std::uint64_t index) const;
  double rate_decrease() const { return 1.0 - rate / rate_no_attack; }
};

// SNR(s, a) = kappa_bar |s_a^H psi_s|^2 for every state and every discrete action.
MatD action_snr_table(const std::vector<ChannelRealization>& states, int bits, double kappa_bar);

// Minimizes the expected rate subject to |E SNR^l - SNR_l| <= zeta_l with
// zeta_l = kappa_l SNR_l. The full LP has n M^N columns, so it is solved by
// column generation over the same constraint rows. When the bands cannot be
// met the policy comes back with feasible = false and min_extra_zeta set.
LpPolicy design_lp_attack(const std::vector<ChannelRealization>& states, const VecD& state_probs, int bits,
                          const SnrMomentSet& moments, std::pair<double, double> kappa_l, double kappa_bar);

// Moments and rate of the no-attack (quantized coherent) configuration.
SnrMomentSet no_attack_moments(const std::vector<ChannelRealization>& states, const VecD& state_probs, int bits,
                               double kappa_bar);

}  // namespace cma
