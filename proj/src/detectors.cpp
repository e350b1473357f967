#include "cma/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cma {

double energy_threshold(int K, double rho, double sigma02) {
  if (K < 1) throw std::invalid_argument("energy_threshold: K must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("energy_threshold: rho must lie in (0, 1)");
  if (!(sigma02 > 0.0)) throw std::invalid_argument("energy_threshold: sigma02 must be positive");
  return chi2_inv(rho, 2 * K) * sigma02 / 2.0;
}

EnergyTest make_energy_test(int K, double rho, double sigma02) {
  return EnergyTest{K, rho, sigma02, energy_threshold(K, rho, sigma02)};
}

DetectionOutcome energy_detect(const CVecD& samples, const EnergyTest& test) {
  if (samples.size() != test.K) throw std::invalid_argument("energy_detect: expected K samples");
  DetectionOutcome out;
  out.detector = "energy";
  out.statistic = energy_statistic(samples);
  out.threshold = test.threshold;
  out.verdict = out.statistic <= test.threshold ? Verdict::H1 : Verdict::H0;
  return out;
}

DetectionOutcome energy_detect(const std::vector<LinkSample>& samples, const EnergyTest& test) {
  CVecD y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) y(static_cast<Eigen::Index>(i)) = samples[i].y;
  return energy_detect(y, test);
}

double detection_probability(double sigma2, const EnergyTest& test) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("detection_probability: sigma2 must be positive");
  return chi2_cdf(2.0 * test.threshold / sigma2, 2 * test.K);
}

GlrCusum::GlrCusum(double sigma02, double sigma_min2, double epsilon, int window)
    : sigma02_(sigma02), sigma_min2_(sigma_min2), epsilon_(epsilon), window_(window), sigma_star2_(sigma02) {
  if (!(sigma02 > 0.0)) throw std::invalid_argument("GlrCusum: sigma02 must be positive");
  if (!(sigma_min2 > 0.0 && sigma_min2 <= sigma02))
    throw std::invalid_argument("GlrCusum: sigma_min2 must lie in (0, sigma02]");
  if (!(epsilon > 0.0)) throw std::invalid_argument("GlrCusum: epsilon must be positive");
  if (window < 1) throw std::invalid_argument("GlrCusum: window must be >= 1");
  ring_.assign(static_cast<std::size_t>(window), 0.0);
}

double GlrCusum::window_mle(double energy, std::int64_t count, double sigma_min2, double sigma02) {
  return std::clamp(energy / static_cast<double>(count), sigma_min2, sigma02);
}

double GlrCusum::window_llr(double energy, std::int64_t count, double s, double sigma02) {
  return static_cast<double>(count) * std::log(sigma02 / s) - energy * (1.0 / s - 1.0 / sigma02);
}

DetectionOutcome GlrCusum::step(cd y) {
  ring_[static_cast<std::size_t>(t_ % window_)] = std::norm(y);
  ++t_;
  const std::int64_t span = std::min<std::int64_t>(t_, window_);
  double energy = 0.0;
  double best = 0.0;
  double best_s = sigma02_;
  for (std::int64_t len = 1; len <= span; ++len) {
    energy += ring_[static_cast<std::size_t>((t_ - len) % window_)];
    const double s = window_mle(energy, len, sigma_min2_, sigma02_);
    const double llr = window_llr(energy, len, s, sigma02_);
    if (llr > best) {
      best = llr;
      best_s = s;
    }
  }
  stat_ = best;
  sigma_star2_ = best_s;
  if (!alarm_ && stat_ >= epsilon_) alarm_ = t_;

  DetectionOutcome out;
  out.detector = "glr-cusum";
  out.statistic = stat_;
  out.threshold = epsilon_;
  out.verdict = stat_ >= epsilon_ ? Verdict::H1 : Verdict::H0;
  if (alarm_) out.run_length = *alarm_;
  return out;
}

void GlrCusum::reset() {
  std::fill(ring_.begin(), ring_.end(), 0.0);
  t_ = 0;
  stat_ = 0.0;
  sigma_star2_ = sigma02_;
  alarm_.reset();
}

DetectionOutcome cusum_step(GlrCusum& det, cd y) { return det.step(y); }

double cusum_threshold(double a, double sigma_min2, double sigma02) {
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("cusum_threshold: a must lie in (0, 1)");
  if (a > 0.5) throw std::invalid_argument("cusum_threshold: a must not exceed 0.5");
  if (!(sigma_min2 > 0.0 && sigma_min2 < sigma02))
    throw std::invalid_argument("cusum_threshold: need 0 < sigma_min2 < sigma02");
  const double info = kl_divergence(sigma_min2, sigma02);
  const double b = 3.0 * std::log(1.0 / a) * std::pow(1.0 + 1.0 / info, 2);
  return -std::log(a / b);
}

double estimate_block_snr(const CVecD& block, double noise_var) {
  if (block.size() == 0) throw std::invalid_argument("estimate_block_snr: empty block");
  if (!(noise_var > 0.0)) throw std::invalid_argument("estimate_block_snr: noise_var must be positive");
  const double mean = block.squaredNorm() / static_cast<double>(block.size());
  return std::max(0.0, (mean - noise_var) / noise_var);
}

DetectionOutcome moment_detect(const std::vector<double>& snr, const MomentDetector& det) {
  if (snr.empty()) throw std::invalid_argument("moment_detect: no SNR estimates");
  if (static_cast<int>(snr.size()) != det.T) throw std::invalid_argument("moment_detect: expected T estimates");
  double s1 = 0.0, s2 = 0.0;
  for (double v : snr) {
    s1 += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(snr.size());
  DetectionOutcome out;
  out.detector = "moment";
  out.statistic = std::abs(s1 / n - det.snr1);
  out.statistic2 = std::abs(s2 / n - det.snr2);
  out.threshold = det.zeta1;
  out.threshold2 = det.zeta2;
  out.verdict = (out.statistic >= det.zeta1 || out.statistic2 >= det.zeta2) ? Verdict::H1 : Verdict::H0;
  return out;
}

double ks_statistic(std::vector<double> energies, const CsiEnergyDist& F0) {
  if (energies.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(energies.begin(), energies.end());
  const double n = static_cast<double>(energies.size());
  double d = 0.0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const double f = F0.cdf(energies[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

double max_eps_ks(int K, double iota) {
  if (K < 2) return std::numeric_limits<double>::infinity();
  return 1.0 / (4.0 * (K - 1) * iota * iota);
}

DoubleThresholdTest double_thresholds(int K, double iota, double eps_ks, std::shared_ptr<const CsiEnergyDist> F0) {
  if (K < 1) throw std::invalid_argument("double_thresholds: K must be >= 1");
  if (!(iota > 0.0) || !(eps_ks >= 0.0)) throw std::invalid_argument("double_thresholds: need iota > 0, eps_ks >= 0");
  if (!F0) throw std::invalid_argument("double_thresholds: missing null distribution");
  const double q = (K - 1) * eps_ks * iota * iota;
  const double disc = 1.0 - 4.0 * q;
  if (disc < 0.0)
    throw std::invalid_argument("double_thresholds: eps_ks too large; the largest admissible value is " +
                                std::to_string(max_eps_ks(K, iota)));
  DoubleThresholdTest t;
  t.K = K;
  t.iota = iota;
  t.eps_ks = eps_ks;
  const double root = std::sqrt(disc);
  // z_l = (1 - root)/2 written as 2q/(1 + root) to avoid cancellation.
  t.z_l = 2.0 * q / (1.0 + root);
  t.z_u = 1.0 - t.z_l;
  t.r_l = t.z_l > 0.0 ? F0->inv_cdf(t.z_l) : 0.0;
  t.r_u = t.z_u < 1.0 ? F0->inv_cdf(t.z_u) : std::numeric_limits<double>::infinity();
  t.F0 = std::move(F0);
  return t;
}

DetectionOutcome double_threshold_detect(const std::vector<double>& energies, const DoubleThresholdTest& test) {
  if (energies.empty()) throw std::invalid_argument("double_threshold_detect: empty sample");
  std::size_t outside = 0;
  for (double r : energies)
    if (r <= test.r_l || r >= test.r_u) ++outside;
  DetectionOutcome out;
  out.detector = "double-threshold";
  out.statistic = static_cast<double>(outside);
  out.threshold = test.r_l;
  out.threshold2 = test.r_u;
  out.verdict = outside > 0 ? Verdict::H1 : Verdict::H0;
  return out;
}

}  // namespace cma
