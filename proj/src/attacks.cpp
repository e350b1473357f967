#include "cma/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cma/detectors.hpp"
#include "cma/solvers/lp.hpp"
#include "cma/solvers/randomization.hpp"
#include "cma/solvers/roots.hpp"

namespace cma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative slack when re-checking a candidate against its bounds.
constexpr double kBoundTol = 1e-9;

solvers::SdpOptions sdp_options_for(const RandomStream& rng) {
  solvers::SdpOptions o;
  o.seed = rng.substream(0x5dfULL).key();
  return o;
}

AttackPlan run_relaxation(const CompositeChannel& cc, const solvers::UnitDiagSdp& prob, int trials,
                          const RandomStream& rng, double lower, double upper) {
  AttackPlan plan;
  plan.target_bound = lower;
  if (std::isfinite(upper)) plan.upper_bound = upper;
  plan.omega.mode = PhaseMode{0};

  const solvers::SdpSolution sol = solvers::solve_unit_diag_sdp(prob, sdp_options_for(rng));
  plan.sdp_status = sol.status;
  plan.sdp_objective = sol.objective;
  plan.sdp_lower_bound = sol.lower_bound;
  plan.achievable_min = sol.achievable_min;
  plan.achievable_max = sol.achievable_max;
  if (sol.status == solvers::SdpStatus::Infeasible) {
    plan.note = "bound outside the achievable range of |s^H psi|^2";
    return plan;
  }

  const auto cands = solvers::gaussian_randomize(sol, trials, rng.substream(1));
  std::vector<double> values(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) values[i] = cascade_power(cands[i], cc.psi);
  const double lo = lower > 0.0 ? lower * (1.0 - kBoundTol) : lower;
  const double hi = std::isfinite(upper) ? upper * (1.0 + kBoundTol) : kInf;
  const auto choice = solvers::select_best(values, lo, hi);
  plan.feasible_candidates = choice.feasible;
  plan.achievable_min = std::min(plan.achievable_min, choice.seen_min);
  plan.achievable_max = std::max(plan.achievable_max, choice.seen_max);
  if (!choice.index) {
    plan.note = "no randomized candidate met the bounds";
    return plan;
  }
  plan.omega.phases = solvers::phases_from_unit_vector(cands[*choice.index]);
  // Re-evaluate from the phases rather than trusting the candidate vector.
  plan.achieved_metric = cascade_power(cc, plan.omega);
  plan.feasible = plan.achieved_metric >= lo && plan.achieved_metric <= hi;
  if (sol.status != solvers::SdpStatus::Optimal) plan.note = "relaxation stopped before certification";
  return plan;
}

}  // namespace

double target_variance_ump(double rho, double xi, int K, double sigma02) {
  if (!(rho > 0.0 && rho < 1.0) || !(xi > 0.0 && xi < 1.0))
    throw std::invalid_argument("target_variance_ump: rho and xi must lie in (0, 1)");
  if (K < 1) throw std::invalid_argument("target_variance_ump: K must be >= 1");
  if (!(sigma02 > 0.0)) throw std::invalid_argument("target_variance_ump: sigma02 must be positive");
  if (xi < rho) throw InfeasibleTarget("target_variance_ump: xi < rho would need sigma^2 > sigma02");
  if (xi == rho) return sigma02;
  return chi2_inv(rho, 2 * K) * sigma02 / chi2_inv(xi, 2 * K);
}

AttackPlan design_phase_attack(const CompositeChannel& cc, double nu, int trials, const RandomStream& rng,
                               std::optional<double> upper_nu) {
  if (!(nu >= 0.0)) throw std::invalid_argument("design_phase_attack: nu must be nonnegative");
  if (trials < 1) throw std::invalid_argument("design_phase_attack: trials must be >= 1");
  const double upper = upper_nu.value_or(kInf);
  const auto prob = solvers::make_unit_diag_sdp(cc.psi, nu, upper);
  return run_relaxation(cc, prob, trials, rng, nu, upper);
}

double a_from_threshold(double epsilon, double kl_min, double a_max) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("a_from_threshold: epsilon must be positive");
  if (!(kl_min > 0.0)) throw std::invalid_argument("a_from_threshold: kl_min must be positive");
  if (!(a_max > 0.0 && a_max < std::exp(1.0)))
    throw std::invalid_argument("a_from_threshold: a_max must lie in (0, e)");
  const double rhs = -std::exp(epsilon) / (3.0 * std::pow(1.0 + 1.0 / kl_min, 2));
  const double top = std::log(a_max) / a_max;
  if (rhs > top)
    throw std::invalid_argument("a_from_threshold: no root in (0, " + std::to_string(a_max) +
                                "]; ln(a)/a there is at most " + std::to_string(top) + " but the target is " +
                                std::to_string(rhs));
  // With a = e^u (u < 0): ln(a)/a = rhs  <=>  ln(-u) - u = ln(-rhs), decreasing in u.
  const double target = std::log(-rhs);
  auto h = [&](double u) { return std::log(-u) - u - target; };
  const double u_hi = std::log(a_max);
  if (h(u_hi) >= 0.0) return a_max;
  double u_lo = std::min(u_hi, -1.0);
  while (h(u_lo) < 0.0) u_lo *= 2.0;
  const double u = solvers::find_root(h, u_lo, u_hi, 1e-15);
  return std::exp(u);
}

double variance_floor_from_arld(double a, double tau_arld, double sigma02) {
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("variance_floor_from_arld: a must lie in (0, 1)");
  if (!(tau_arld > 0.0)) throw std::invalid_argument("variance_floor_from_arld: tau_arld must be positive");
  if (!(sigma02 > 0.0)) throw std::invalid_argument("variance_floor_from_arld: sigma02 must be positive");
  const double c = -std::log(a) / tau_arld;
  if (!(c > 0.0)) throw InfeasibleTarget("variance_floor_from_arld: L' below the branch infimum");
  // x = Q'/sigma02 = e^u solves -u + e^u - 1 = c on u <= 0.
  auto h = [&](double u) { return -u + std::expm1(u) - c; };
  double u_lo = -(c + 2.0);
  while (h(u_lo) < 0.0) u_lo *= 2.0;
  const double u = solvers::find_root(h, u_lo, 0.0, 1e-15);
  return sigma02 * std::exp(u);
}

double arld_l_prime(double a, double tau_arld, double sigma02) {
  return sigma02 * (1.0 - std::log(sigma02) - std::log(a) / tau_arld);
}

double arld_l_prime_residual(double q, double a, double tau_arld, double sigma02) {
  return q - sigma02 * std::log(q) - arld_l_prime(a, tau_arld, sigma02);
}

AttackPlan design_cusum_attack(const CompositeChannel& cc, double epsilon, double sigma_min2, double sigma02,
                               double tau_arld, int trials, const RandomStream& rng) {
  const double info = kl_divergence(sigma_min2, sigma02);
  const double a = a_from_threshold(epsilon, info);
  const double q = variance_floor_from_arld(a, tau_arld, sigma02);
  const double nu = std::max(0.0, (q - cc.noise_var) / cc.p_tx);
  AttackPlan plan = design_phase_attack(cc, nu, trials, rng);
  if (plan.feasible) {
    const double s2 = cc.noise_var + cc.p_tx * plan.achieved_metric;
    const double kl = s2 < sigma02 ? kl_divergence(s2, sigma02) : 0.0;
    plan.predicted = kl > 0.0 ? -std::log(a) / kl : kInf;
  }
  return plan;
}

AttackPlan design_miso_attack(const CompositeChannel& cc, double rho, double xi, int K, double sigma_j02, int trials,
                              const RandomStream& rng) {
  const double s2 = target_variance_ump(rho, xi, K, sigma_j02);
  const double nu = std::max(0.0, (s2 - cc.noise_var) / cc.p_tx);
  AttackPlan plan = design_phase_attack(cc, nu, trials, rng);
  if (plan.feasible) {
    const EnergyTest test = make_energy_test(K, rho, sigma_j02);
    plan.predicted = detection_probability(cc.noise_var + cc.p_tx * plan.achieved_metric, test);
  }
  return plan;
}

AttackPlan design_csi_attack(const CompositeChannel& psi_hat, double nu_ks, double r_l, double sigma_e2,
                             double sigma_w2, int n, int trials, const RandomStream& rng,
                             std::optional<double> nu_tilde) {
  if (n != psi_hat.size()) throw std::invalid_argument("design_csi_attack: n does not match the channel");
  if (!(nu_ks > 0.0) || !(r_l > 0.0)) throw std::invalid_argument("design_csi_attack: need nu_ks, r_l > 0");
  if (!(sigma_e2 >= 0.0) || !(sigma_w2 > 0.0)) throw std::invalid_argument("design_csi_attack: bad variances");
  const double p = psi_hat.p_tx;
  const double err = p * n * sigma_e2;
  const double upper = (nu_ks * r_l - err - sigma_w2) / p;
  double lower = 0.0;
  if (nu_tilde) lower = std::max(0.0, (*nu_tilde - err - sigma_w2) / p);

  if (!(upper > 0.0) || lower > upper) {
    AttackPlan plan;
    plan.target_bound = upper;
    plan.upper_bound = upper;
    plan.omega.mode = PhaseMode{0};
    plan.sdp_status = solvers::SdpStatus::Infeasible;
    plan.note = "energy budget below the noise and estimation-error floor";
    return plan;
  }
  const auto prob = solvers::make_unit_diag_sdp(psi_hat.psi, lower, upper);
  AttackPlan plan = run_relaxation(psi_hat, prob, trials, rng, lower, upper);
  plan.target_bound = upper;
  plan.upper_bound = upper;
  if (plan.feasible) plan.predicted = std::log2(1.0 + p * (plan.achieved_metric + n * sigma_e2) / sigma_w2);
  return plan;
}

PhaseVector random_phase_baseline(Eigen::Index n, std::optional<int> bits, RandomStream& rng) {
  if (n < 1) throw std::invalid_argument("random_phase_baseline: n must be >= 1");
  PhaseVector pv;
  pv.phases.resize(n);
  if (bits) {
    if (*bits < 1) throw std::invalid_argument("random_phase_baseline: bits must be >= 1");
    pv.mode = PhaseMode{*bits};
    for (Eigen::Index k = 0; k < n; ++k)
      pv.phases(k) = static_cast<double>(rng.below(static_cast<std::uint64_t>(pv.mode.levels()))) * pv.mode.step();
  } else {
    pv.mode = PhaseMode{0};
    for (Eigen::Index k = 0; k < n; ++k) pv.phases(k) = rng.uniform(0.0, kTwoPi);
  }
  return pv;
}

double estimate_sigma_min(const CompositeChannel& cc, int trials, const RandomStream& rng) {
  const AttackPlan plan = design_phase_attack(cc, 0.0, trials, rng);
  if (!plan.feasible) throw NumericalFailure("estimate_sigma_min: unconstrained attack produced no candidate");
  return cc.noise_var + cc.p_tx * plan.achieved_metric;
}

PhaseVector maximize_cascade(const CompositeChannel& cc, int trials, const RandomStream& rng) {
  if (cc.antennas() == 1) {
    PhaseVector pv;
    pv.mode = PhaseMode{0};
    pv.phases.resize(cc.size());
    for (Eigen::Index k = 0; k < cc.size(); ++k) pv.phases(k) = wrap_phase(-std::arg(cc.psi(k, 0)));
    return pv;
  }
  solvers::UnitDiagSdp prob = solvers::make_unit_diag_sdp(cc.psi, -kInf);
  prob.L = -prob.L;
  prob.factor.resize(0, 0);
  prob.nu = -kInf;
  const auto sol = solvers::solve_unit_diag_sdp(prob, sdp_options_for(rng));
  const auto cands = solvers::gaussian_randomize(sol, trials, rng.substream(2));
  std::size_t best = 0;
  double best_v = -1.0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double v = cascade_power(cands[i], cc.psi);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  PhaseVector pv;
  pv.mode = PhaseMode{0};
  pv.phases = solvers::phases_from_unit_vector(cands[best]);
  return pv;
}

// ---- LP policy ----------------------------------------------------------------

PhaseVector LpPolicy::action(std::uint64_t index) const {
  PhaseVector pv;
  pv.mode = PhaseMode{bits};
  pv.phases.resize(n_elements);
  const std::uint64_t levels = static_cast<std::uint64_t>(pv.mode.levels());
  for (Eigen::Index k = 0; k < n_elements; ++k) {
    pv.phases(k) = static_cast<double>(index % levels) * pv.mode.step();
    index /= levels;
  }
  return pv;
}

namespace {

void check_action_space(const std::vector<ChannelRealization>& states, int bits) {
  if (states.empty()) throw std::invalid_argument("LP attack: no states");
  if (bits < 1) throw std::invalid_argument("LP attack: bits must be >= 1");
  const Eigen::Index n = states.front().size();
  for (const auto& s : states)
    if (s.size() != n) throw std::invalid_argument("LP attack: states differ in size");
  if (n * bits > 16)
    throw std::invalid_argument("LP attack: action space M^N = 2^" + std::to_string(n * bits) +
                                " is too large to enumerate (limit N*b <= 16)");
}

std::uint64_t action_index(const PhaseVector& pv) {
  const std::uint64_t levels = static_cast<std::uint64_t>(pv.mode.levels());
  std::uint64_t idx = 0;
  for (Eigen::Index k = pv.size(); k-- > 0;) {
    const auto d = static_cast<std::uint64_t>(std::llround(pv.phases(k) / pv.mode.step())) % levels;
    idx = idx * levels + d;
  }
  return idx;
}

}  // namespace

MatD action_snr_table(const std::vector<ChannelRealization>& states, int bits, double kappa_bar) {
  check_action_space(states, bits);
  const Eigen::Index n = states.front().size();
  const std::uint64_t levels = std::uint64_t{1} << bits;
  const std::uint64_t m = std::uint64_t{1} << (bits * n);
  MatD table(static_cast<Eigen::Index>(states.size()), static_cast<Eigen::Index>(m));
  std::vector<cd> rot(static_cast<std::size_t>(levels));
  for (std::uint64_t d = 0; d < levels; ++d) rot[d] = std::polar(1.0, kTwoPi * static_cast<double>(d) / levels);

  for (std::size_t si = 0; si < states.size(); ++si) {
    const CVecD psi = states[si].g.cwiseProduct(states[si].h);
    // Partial sums over the low half of the digits, reused across the high half.
    const Eigen::Index lo_n = n / 2;
    const std::uint64_t lo_m = std::uint64_t{1} << (bits * lo_n);
    std::vector<cd> low(static_cast<std::size_t>(lo_m));
    for (std::uint64_t a = 0; a < lo_m; ++a) {
      cd acc = 0.0;
      std::uint64_t r = a;
      for (Eigen::Index k = 0; k < lo_n; ++k) {
        acc += rot[r % levels] * psi(k);
        r /= levels;
      }
      low[a] = acc;
    }
    for (std::uint64_t hi = 0; hi < (m >> (bits * lo_n)); ++hi) {
      cd acc = 0.0;
      std::uint64_t r = hi;
      for (Eigen::Index k = lo_n; k < n; ++k) {
        acc += rot[r % levels] * psi(k);
        r /= levels;
      }
      const std::uint64_t base = hi << (bits * lo_n);
      for (std::uint64_t a = 0; a < lo_m; ++a)
        table(static_cast<Eigen::Index>(si), static_cast<Eigen::Index>(base + a)) = kappa_bar * std::norm(acc + low[a]);
    }
  }
  return table;
}

SnrMomentSet no_attack_moments(const std::vector<ChannelRealization>& states, const VecD& state_probs, int bits,
                               double kappa_bar) {
  check_action_space(states, bits);
  if (state_probs.size() != static_cast<Eigen::Index>(states.size()))
    throw std::invalid_argument("no_attack_moments: state_probs size mismatch");
  SnrMomentSet s;
  s.model = PhaseMode{bits};
  s.kappa = kappa_bar;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double snr = received_snr(states[i], quantize_phases(optimal_phases(states[i]), bits), kappa_bar);
    const double w = state_probs(static_cast<Eigen::Index>(i));
    s.m1 += w * snr;
    s.m2 += w * snr * snr;
  }
  return s;
}

LpPolicy design_lp_attack(const std::vector<ChannelRealization>& states, const VecD& state_probs, int bits,
                          const SnrMomentSet& moments, std::pair<double, double> kappa_l, double kappa_bar) {
  check_action_space(states, bits);
  const Eigen::Index n = static_cast<Eigen::Index>(states.size());
  if (state_probs.size() != n) throw std::invalid_argument("design_lp_attack: state_probs size mismatch");
  if (std::abs(state_probs.sum() - 1.0) > 1e-9 || state_probs.minCoeff() < 0.0)
    throw std::invalid_argument("design_lp_attack: state_probs must be a probability vector");
  if (!(moments.m1 > 0.0 && moments.m2 > 0.0)) throw std::invalid_argument("design_lp_attack: moments must be positive");
  if (!(kappa_l.first >= 0.0 && kappa_l.second >= 0.0))
    throw std::invalid_argument("design_lp_attack: tolerances must be nonnegative");

  LpPolicy pol;
  pol.states = states;
  pol.state_probs = state_probs;
  pol.bits = bits;
  pol.n_elements = states.front().size();
  pol.moments_reference = {moments.m1, moments.m2};
  pol.zeta = {kappa_l.first * moments.m1, kappa_l.second * moments.m2};

  const MatD snr = action_snr_table(states, bits, kappa_bar);
  const Eigen::Index m = snr.cols();
  const double s1 = moments.m1, s2 = moments.m2;
  const double z1 = kappa_l.first, z2 = kappa_l.second;  // relative band half-widths

  struct Column {
    Eigen::Index state;
    Eigen::Index action;
  };
  std::vector<Column> cols;
  std::vector<Eigen::Index> no_attack(static_cast<std::size_t>(n));
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto a0 = static_cast<Eigen::Index>(
        action_index(quantize_phases(optimal_phases(states[static_cast<std::size_t>(s)]), bits)));
    no_attack[static_cast<std::size_t>(s)] = a0;
    Eigen::Index amin = 0, amax = 0;
    snr.row(s).minCoeff(&amin);
    snr.row(s).maxCoeff(&amax);
    cols.push_back({s, a0});
    if (amin != a0) cols.push_back({s, amin});
    if (amax != a0 && amax != amin) cols.push_back({s, amax});
  }

  double rate0 = 0.0, rate_max = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    rate0 += state_probs(s) * std::log2(1.0 + snr(s, no_attack[static_cast<std::size_t>(s)]));
    rate_max = std::max(rate_max, std::log2(1.0 + snr.row(s).maxCoeff()));
  }
  pol.rate_no_attack = rate0;
  // Elastic columns relax each moment row at a price far above any rate gain.
  const double penalty = 1e4 * (rate_max + 1.0);

  solvers::LpSolution lp;
  for (int round = 0; round < 500; ++round) {
    const Eigen::Index nc = static_cast<Eigen::Index>(cols.size());
    solvers::LpProblem prob;
    prob.c.resize(nc + 4);
    std::vector<Eigen::Triplet<double>> eq, ub;
    for (Eigen::Index j = 0; j < nc; ++j) {
      const auto [s, a] = cols[static_cast<std::size_t>(j)];
      const double x = snr(s, a);
      const double w = state_probs(s);
      prob.c(j) = w * std::log2(1.0 + x);
      eq.emplace_back(s, j, 1.0);
      ub.emplace_back(0, j, w * x / s1);
      ub.emplace_back(1, j, -w * x / s1);
      ub.emplace_back(2, j, w * x * x / s2);
      ub.emplace_back(3, j, -w * x * x / s2);
    }
    for (int k = 0; k < 4; ++k) {
      prob.c(nc + k) = penalty;
      ub.emplace_back(k, nc + k, -1.0);
    }
    prob.A_eq.resize(n, nc + 4);
    prob.A_eq.setFromTriplets(eq.begin(), eq.end());
    prob.b_eq = VecD::Ones(n);
    prob.A_ub.resize(4, nc + 4);
    prob.A_ub.setFromTriplets(ub.begin(), ub.end());
    prob.b_ub.resize(4);
    prob.b_ub << 1.0 + z1, -(1.0 - z1), 1.0 + z2, -(1.0 - z2);

    lp = solvers::solve_lp(prob);
    pol.lp_iterations += lp.iterations;
    pol.pricing_rounds = round + 1;
    if (!lp.optimal()) throw NumericalFailure("design_lp_attack: master LP returned " + solvers::to_string(lp.status));

    // Price every (state, action) pair; add the most negative column per state.
    const VecD& u = lp.dual_eq;
    const double g1 = (lp.dual_ub(0) - lp.dual_ub(1)) / s1;
    const double g2 = (lp.dual_ub(2) - lp.dual_ub(3)) / s2;
    std::size_t added = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
      const double w = state_probs(s);
      double best = -1e-9 * std::max(1.0, std::abs(u(s)));
      Eigen::Index best_a = -1;
      for (Eigen::Index a = 0; a < m; ++a) {
        const double x = snr(s, a);
        const double d = w * (std::log2(1.0 + x) - g1 * x - g2 * x * x) - u(s);
        if (d < best) {
          best = d;
          best_a = a;
        }
      }
      if (best_a >= 0) {
        cols.push_back({s, best_a});
        ++added;
      }
    }
    if (added == 0) break;
  }

  const Eigen::Index nc = static_cast<Eigen::Index>(cols.size());
  double elastic = 0.0;
  for (int k = 0; k < 4; ++k) elastic = std::max(elastic, lp.x(nc + k));
  pol.min_extra_zeta = elastic;
  pol.feasible = elastic <= 1e-9;

  std::vector<Eigen::Triplet<double>> pt;
  std::vector<double> row_sum(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index j = 0; j < nc; ++j) {
    const double v = lp.x(j);
    if (v <= 1e-12) continue;
    pt.emplace_back(cols[static_cast<std::size_t>(j)].state, cols[static_cast<std::size_t>(j)].action, v);
    row_sum[static_cast<std::size_t>(cols[static_cast<std::size_t>(j)].state)] += v;
  }
  // Renormalize away solver round-off so each row sums to one.
  for (auto& t : pt) t = Eigen::Triplet<double>(t.row(), t.col(), t.value() / row_sum[static_cast<std::size_t>(t.row())]);
  pol.probs.resize(n, m);
  pol.probs.setFromTriplets(pt.begin(), pt.end());
  pol.probs.makeCompressed();

  // Re-verify moments and rate from raw gains.
  double m1 = 0.0, m2 = 0.0, rate = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    for (decltype(pol.probs)::InnerIterator it(pol.probs, s); it; ++it) {
      const double x = received_snr(states[static_cast<std::size_t>(s)], pol.action(static_cast<std::uint64_t>(it.col())),
                                    kappa_bar);
      const double w = state_probs(s) * it.value();
      m1 += w * x;
      m2 += w * x * x;
      rate += w * std::log2(1.0 + x);
    }
  }
  pol.moments_achieved = {m1, m2};
  pol.rate = rate;
  return pol;
}

}  // namespace cma
