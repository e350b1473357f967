#pragma once

#include <vector>

#include "cma/channel.hpp"
#include "cma/special.hpp"

namespace cma {

// R_{dof, prob}: the chi-square quantile used by the energy detector.
struct Chi2Quantile {
  int dof = 2;
  double prob = 0.5;
  double value = 0.0;
};

Chi2Quantile chi2_quantile(double prob, int dof);

inline double chi2_cdf(double x, int dof) { return special::chi2_cdf(x, dof); }
inline double chi2_inv(double p, int dof) { return special::chi2_inv(p, dof); }

// Closed-form moments of the no-attack SNR Gamma* = kappa |sum alpha_k beta_k e^{j delta_k}|^2.
// Continuous phases use the CLT noncentral chi-square (one dof) law; b-bit
// phases use the gamma law for |V|^2.
struct SnrMomentSet {
  double m1 = 0.0;
  double m2 = 0.0;
  PhaseMode model;
  double kappa = 1.0;
  // Continuous model: Z ~ N(mu_z, sigma_z2).
  double mu_z = 0.0;
  double sigma_z2 = 0.0;
  // Discrete model: Gamma* ~ Gamma(shape, scale).
  double shape = 0.0;
  double scale = 0.0;

  double variance() const { return m2 - m1 * m1; }
  double mgf(double t) const;
  double pdf(double gamma) const;
};

SnrMomentSet snr_moments_continuous(int n, double kappa, double eps_h, double eps_g);

// Characteristic function of the uniform quantization error on (-tau, tau],
// tau = pi / 2^b: sin(omega tau) / (omega tau).
double quantization_cf(double omega, int bits);

SnrMomentSet snr_moments_discrete(int n, double kappa, double eps_h, double eps_g, int bits);

// Moments estimated from an SNR sample; mgf/pdf are not available on the result.
SnrMomentSet empirical_moments(const std::vector<double>& snr, PhaseMode model, double kappa);

// KL divergence I(sigma2) between CN(0, sigma2) and CN(0, sigma02):
// ln(sigma02 / sigma2) + sigma2 / sigma02 - 1.
double kl_divergence(double sigma2, double sigma02);

enum class CsiModel {
  // Signal-plus-noise term and the error term Zbar x treated as independent.
  Independent,
  // Alternative where both terms share the symbol x. Unvalidated.
  SharedSymbol,
};

// Law of r = |y|^2 under imperfect CSI: y = u + Zbar x with u ~ CN(0, sigma2),
// Zbar ~ CN(0, sigma_s2), x ~ CN(0, 1). The CDF is evaluated by quadrature over
// the exponential law of |x|^2:
//   F(r) = 1 - E_xi[ exp(-r / (sigma2 + sigma_s2 xi)) ],  xi ~ Exp(1).
// A coarse table, built once, brackets the inverse; the object is immutable.
class CsiEnergyDist {
public:
  CsiEnergyDist(double sigma2, double sigma_s2, CsiModel model = CsiModel::Independent,
                double noise_var = 0.0);

  double sigma2() const { return sigma2_; }
  double sigma_s2() const { return sigma_s2_; }
  CsiModel model() const { return model_; }
  double mean() const { return sigma2_ + sigma_s2_; }

  double cdf(double r) const;
  double sf(double r) const;
  double inv_cdf(double p) const;

  // An alternative closed form, kept for comparison:
  //   1 - (sigma2/sigma_s2) e^{-sigma2/sigma_s2} int_1^inf exp(-sigma2 t/sigma_s2 - r/(sigma2 t)) dt.
  double printed_cdf(double r) const;
  // printed_cdf(0); nonzero values flag the printed form as inconsistent with
  // r being a continuous nonnegative variable.
  double printed_cdf_defect() const { return printed_cdf(0.0); }

private:
  double survival_independent(double r) const;
  double survival_shared(double r) const;

  double sigma2_;
  double sigma_s2_;
  CsiModel model_;
  double noise_var_;
  std::vector<double> grid_r_;
  std::vector<double> grid_cdf_;
};

CsiEnergyDist csi_energy_dist(double sigma2, double sigma_s2);

// Bisection inverse of dist.cdf.
double csi_inv_cdf(const CsiEnergyDist& dist, double p);

}  // namespace cma
