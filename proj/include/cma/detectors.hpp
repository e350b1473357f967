#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cma/channel.hpp"
#include "cma/statdist.hpp"

namespace cma {

enum class Verdict { H0, H1 };

inline const char* to_string(Verdict v) { return v == Verdict::H1 ? "H1" : "H0"; }

struct DetectionOutcome {
  std::string detector;
  double statistic = 0.0;
  double threshold = 0.0;
  // Second statistic/threshold pair (moment detector, double-threshold band).
  double statistic2 = std::numeric_limits<double>::quiet_NaN();
  double threshold2 = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::H0;
  // Samples consumed when a sequential test alarmed.
  std::optional<std::int64_t> run_length;

  bool alarm() const { return verdict == Verdict::H1; }
};

// ---- Fixed-sample energy test ------------------------------------------------

struct EnergyTest {
  int K = 1;
  double rho = 0.05;
  double sigma02 = 1.0;
  // eta' with 2 eta' / sigma02 = R_{2K, rho}.
  double threshold = 0.0;
};

double energy_threshold(int K, double rho, double sigma02);
EnergyTest make_energy_test(int K, double rho, double sigma02);

template <class Derived>
double energy_statistic(const Eigen::MatrixBase<Derived>& y) {
  return y.squaredNorm();
}

// H1 iff W = sum |y_i|^2 <= eta' (ties go to H1).
DetectionOutcome energy_detect(const CVecD& samples, const EnergyTest& test);
DetectionOutcome energy_detect(const std::vector<LinkSample>& samples, const EnergyTest& test);

// P(W <= eta' | variance sigma2) = chi2_cdf(2 eta' / sigma2, 2K).
double detection_probability(double sigma2, const EnergyTest& test);

// ---- GLR-CUSUM ---------------------------------------------------------------

// Sequential test for a drop of the CN(0, .) variance from sigma02 to an
// unknown value in [sigma_min2, sigma02). The statistic is
//   max over change points k in the last `window` samples of
//   sup_{s in [sigma_min2, sigma02]} sum_{i >= k} ln f_s(y_i) / f_0(y_i),
// evaluated exactly; the inner sup is the clamped window MLE.
class GlrCusum {
public:
  GlrCusum(double sigma02, double sigma_min2, double epsilon, int window);

  DetectionOutcome step(cd y);
  void reset();

  double sigma02() const { return sigma02_; }
  double sigma_min2() const { return sigma_min2_; }
  double epsilon() const { return epsilon_; }
  int window() const { return window_; }
  double statistic() const { return stat_; }
  std::int64_t time() const { return t_; }
  std::optional<std::int64_t> alarm_time() const { return alarm_; }
  // Variance estimate for the maximizing change point of the last step.
  double sigma_star2() const { return sigma_star2_; }

  // Clamped MLE of the variance for a window with energy sum `energy` over `count` samples.
  static double window_mle(double energy, std::int64_t count, double sigma_min2, double sigma02);
  // Window log-likelihood ratio at variance s.
  static double window_llr(double energy, std::int64_t count, double s, double sigma02);

private:
  double sigma02_;
  double sigma_min2_;
  double epsilon_;
  int window_;
  std::vector<double> ring_;
  std::int64_t t_ = 0;
  double stat_ = 0.0;
  double sigma_star2_;
  std::optional<std::int64_t> alarm_;
};

DetectionOutcome cusum_step(GlrCusum& det, cd y);

// epsilon_GLR = -ln(a / b), b = 3 ln(1/a) (1 + 1/I(sigma_min2))^2; a in (0, 0.5].
double cusum_threshold(double a, double sigma_min2, double sigma02);

// ---- SNR-moment detector -----------------------------------------------------

struct MomentDetector {
  double snr1 = 0.0;
  double snr2 = 0.0;
  double zeta1 = 0.0;
  double zeta2 = 0.0;
  int T = 1;
};

// Maps the K received symbols of one block and the noise variance to an SNR estimate.
using SnrEstimator = std::function<double(const CVecD& block, double noise_var)>;

// max(0, (mean |y|^2 - sigma_w^2) / sigma_w^2).
double estimate_block_snr(const CVecD& block, double noise_var);

// H1 iff |mean(snr) - snr1| >= zeta1 or |mean(snr^2) - snr2| >= zeta2.
DetectionOutcome moment_detect(const std::vector<double>& snr_estimates, const MomentDetector& det);

// ---- KS / double-threshold test under imperfect CSI -------------------------

// Two-sided sup distance between the empirical CDF of `energies` and F0.
double ks_statistic(std::vector<double> energies, const CsiEnergyDist& F0);

struct DoubleThresholdTest {
  double r_l = 0.0;
  double r_u = std::numeric_limits<double>::infinity();
  // Roots of z^2 - z + (K - 1) eps_ks iota^2 = 0.
  double z_l = 0.0;
  double z_u = 1.0;
  double iota = 0.0;
  double eps_ks = 0.0;
  int K = 1;
  std::shared_ptr<const CsiEnergyDist> F0;
};

// Largest eps_ks for which the threshold quadratic has real roots.
double max_eps_ks(int K, double iota);

DoubleThresholdTest double_thresholds(int K, double iota, double eps_ks, std::shared_ptr<const CsiEnergyDist> F0);

// H1 iff some energy lies outside (r_l, r_u).
DetectionOutcome double_threshold_detect(const std::vector<double>& energies, const DoubleThresholdTest& test);

}  // namespace cma
