#include "cma/statdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cma/solvers/quadrature.hpp"

namespace cma {

namespace {

// Truncation point of the Exp(1) mixing variable: e^{-27.7} < 1e-12.
constexpr double kXiMax = 27.7;
constexpr double kCdfTol = 1e-13;

solvers::QuadratureOptions cdf_opts() { return solvers::QuadratureOptions{kCdfTol, 0.0, 4000}; }

}  // namespace

Chi2Quantile chi2_quantile(double prob, int dof) {
  return Chi2Quantile{dof, prob, special::chi2_inv(prob, dof)};
}

double SnrMomentSet::mgf(double t) const {
  if (!model.discrete()) {
    if (sigma_z2 <= 0.0 && mu_z == 0.0) throw std::logic_error("SnrMomentSet::mgf: no model parameters");
    const double d = 1.0 - 2.0 * kappa * t * sigma_z2;
    if (d <= 0.0) return std::numeric_limits<double>::infinity();
    return std::exp(mu_z * mu_z * kappa * t / d) / std::sqrt(d);
  }
  if (!(shape > 0.0 && scale > 0.0)) throw std::logic_error("SnrMomentSet::mgf: no model parameters");
  const double d = 1.0 - scale * t;
  if (d <= 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(d, -shape);
}

double SnrMomentSet::pdf(double gamma) const {
  if (gamma <= 0.0) return 0.0;
  if (!model.discrete()) {
    if (!(sigma_z2 > 0.0)) throw std::logic_error("SnrMomentSet::pdf: no model parameters");
    // Gamma = kappa Z^2 with Z ~ N(mu_z, sigma_z2).
    const double z = std::sqrt(gamma / kappa);
    const double c = 1.0 / (2.0 * std::sqrt(2.0 * kPi * kappa * sigma_z2 * gamma));
    const double a = (z - mu_z) * (z - mu_z) / (2.0 * sigma_z2);
    const double b = (z + mu_z) * (z + mu_z) / (2.0 * sigma_z2);
    return c * (std::exp(-a) + std::exp(-b));
  }
  if (!(shape > 0.0 && scale > 0.0)) throw std::logic_error("SnrMomentSet::pdf: no model parameters");
  return std::exp((shape - 1.0) * std::log(gamma) - gamma / scale - std::lgamma(shape) -
                  shape * std::log(scale));
}

SnrMomentSet snr_moments_continuous(int n, double kappa, double eps_h, double eps_g) {
  if (n < 1) throw std::invalid_argument("snr_moments_continuous: n must be >= 1");
  const double nn = n;
  const double e = eps_h * eps_g;
  SnrMomentSet s;
  s.model = PhaseMode{0};
  s.kappa = kappa;
  s.mu_z = nn * std::sqrt(e) * kPi / 4.0;
  s.sigma_z2 = nn * e * (1.0 - kPi * kPi / 16.0);
  const double mu2 = s.mu_z * s.mu_z;
  const double v = s.sigma_z2;
  s.m1 = kappa * (mu2 + v);
  s.m2 = kappa * kappa * (mu2 * mu2 + 6.0 * mu2 * v + 3.0 * v * v);
  return s;
}

double quantization_cf(double omega, int bits) {
  if (bits < 1) throw std::invalid_argument("quantization_cf: bits must be >= 1");
  const double x = omega * kPi / std::ldexp(1.0, bits);
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

SnrMomentSet snr_moments_discrete(int n, double kappa, double eps_h, double eps_g, int bits) {
  if (n < 1) throw std::invalid_argument("snr_moments_discrete: n must be >= 1");
  if (bits < 1) throw std::invalid_argument("snr_moments_discrete: bits must be >= 1");
  const double nn = n;
  const double e = eps_h * eps_g;
  const double phi1 = quantization_cf(1.0, bits);
  const double phi2 = quantization_cf(2.0, bits);
  const double mu = kPi / 4.0 * std::sqrt(e) * phi1;
  const double var_r = e / (2.0 * nn) * (1.0 + phi2 - kPi * kPi / 8.0 * phi1 * phi1);

  SnrMomentSet s;
  s.model = PhaseMode{bits};
  s.kappa = kappa;
  s.shape = mu * mu / (4.0 * var_r);
  s.scale = kappa * nn * nn * 4.0 * var_r;
  s.m1 = kappa * nn * nn * mu * mu;
  // Second moment of the gamma law, k theta^2 (1 + k).
  s.m2 = kappa * kappa * std::pow(nn, 4) * mu * mu * (4.0 * var_r + mu * mu);
  return s;
}

SnrMomentSet empirical_moments(const std::vector<double>& snr, PhaseMode model, double kappa) {
  if (snr.empty()) throw std::invalid_argument("empirical_moments: empty sample");
  double s1 = 0.0, s2 = 0.0;
  for (double g : snr) {
    s1 += g;
    s2 += g * g;
  }
  SnrMomentSet s;
  s.model = model;
  s.kappa = kappa;
  s.m1 = s1 / snr.size();
  s.m2 = s2 / snr.size();
  return s;
}

double kl_divergence(double sigma2, double sigma02) {
  if (!(sigma2 > 0.0) || !(sigma02 > 0.0)) throw std::invalid_argument("kl_divergence: variances must be positive");
  const double x = sigma2 / sigma02;
  return -std::log(x) + x - 1.0;
}

CsiEnergyDist::CsiEnergyDist(double sigma2, double sigma_s2, CsiModel model, double noise_var)
    : sigma2_(sigma2), sigma_s2_(sigma_s2), model_(model), noise_var_(noise_var) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("CsiEnergyDist: sigma2 must be positive");
  if (!(sigma_s2 >= 0.0)) throw std::invalid_argument("CsiEnergyDist: sigma_s2 must be nonnegative");
  if (model == CsiModel::SharedSymbol && !(noise_var > 0.0 && noise_var <= sigma2))
    throw std::invalid_argument("CsiEnergyDist: shared-symbol model needs 0 < noise_var <= sigma2");

  const double m = mean();
  for (double x = -10.0; x <= 2.0 + 1e-9; x += 0.25) {
    const double r = m * std::pow(10.0, x);
    grid_r_.push_back(r);
    grid_cdf_.push_back(cdf(r));
  }
}

double CsiEnergyDist::survival_independent(double r) const {
  if (sigma_s2_ == 0.0) return std::exp(-r / sigma2_);
  auto f = [&](double xi) { return std::exp(-xi - r / (sigma2_ + sigma_s2_ * xi)); };
  return solvers::integrate(f, 0.0, kXiMax, cdf_opts()).value;
}

// y = (a + Zbar) x + w with |a|^2 = sigma2 - noise_var. Conditioning on Zbar,
// r is exponential with mean noise_var + |a + Zbar|^2; average over |Zbar|^2
// ~ Exp(sigma_s2) and the angle between a and Zbar.
double CsiEnergyDist::survival_shared(double r) const {
  const double a2 = sigma2_ - noise_var_;
  const double a = std::sqrt(std::max(a2, 0.0));
  auto inner = [&](double u) {
    const double su = std::sqrt(u);
    auto g = [&](double th) {
      const double var = noise_var_ + a2 + u + 2.0 * a * su * std::cos(th);
      return std::exp(-r / std::max(var, 1e-300));
    };
    return solvers::integrate(g, 0.0, kPi, solvers::QuadratureOptions{1e-12, 0.0, 2000}).value / kPi;
  };
  if (sigma_s2_ == 0.0) return inner(0.0);
  auto outer = [&](double v) { return std::exp(-v) * inner(sigma_s2_ * v); };
  return solvers::integrate(outer, 0.0, kXiMax, solvers::QuadratureOptions{1e-11, 0.0, 2000}).value;
}

double CsiEnergyDist::sf(double r) const {
  if (r <= 0.0) return 1.0;
  const double s = model_ == CsiModel::Independent ? survival_independent(r) : survival_shared(r);
  return std::clamp(s, 0.0, 1.0);
}

double CsiEnergyDist::cdf(double r) const {
  if (r <= 0.0) return 0.0;
  return 1.0 - sf(r);
}

double CsiEnergyDist::printed_cdf(double r) const {
  if (sigma_s2_ == 0.0) return 1.0 - std::exp(-r / sigma2_);
  const double a = sigma2_ / sigma_s2_;
  // Exponent combined so that large a does not overflow.
  auto f = [&](double t) { return std::exp(-a - a * t - r / (sigma2_ * t)); };
  const double v = solvers::integrate(f, 1.0, solvers::kInf, cdf_opts()).value;
  return 1.0 - a * v;
}

double CsiEnergyDist::inv_cdf(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("CsiEnergyDist::inv_cdf: p must lie in (0, 1)");
  double lo = 0.0, hi = 0.0;
  const auto it = std::lower_bound(grid_cdf_.begin(), grid_cdf_.end(), p);
  if (it == grid_cdf_.end()) {
    lo = grid_r_.back();
    hi = lo * 2.0;
    while (cdf(hi) < p) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw NumericalFailure("CsiEnergyDist::inv_cdf: cannot bracket");
    }
  } else {
    const auto i = static_cast<std::size_t>(it - grid_cdf_.begin());
    hi = grid_r_[i];
    lo = i == 0 ? 0.0 : grid_r_[i - 1];
  }
  for (int k = 0; k < 200 && hi - lo > 1e-12 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

CsiEnergyDist csi_energy_dist(double sigma2, double sigma_s2) { return CsiEnergyDist(sigma2, sigma_s2); }

double csi_inv_cdf(const CsiEnergyDist& dist, double p) { return dist.inv_cdf(p); }

}  // namespace cma
