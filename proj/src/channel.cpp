#include "cma/channel.hpp"

#include <cmath>

namespace cma {
namespace {

constexpr double kDegenerate = 1e-300;

void require_siso(const ChannelRealization& ch) {
  if (!ch.has_siso()) throw std::invalid_argument("channel: SISO gains h, g missing or mismatched");
}

void require_size(const ChannelRealization& ch, const PhaseVector& omega) {
  if (omega.size() != ch.size())
    throw std::invalid_argument("channel: phase vector length " + std::to_string(omega.size()) +
                                " does not match " + std::to_string(ch.size()) + " RIS elements");
}

}  // namespace

ChannelRealization sample_rayleigh(Eigen::Index n, double eps_h, double eps_g, RandomStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_rayleigh: n must be >= 1");
  if (!(eps_h > 0.0) || !(eps_g > 0.0))
    throw std::invalid_argument("sample_rayleigh: path losses must be positive");
  ChannelRealization ch;
  ch.eps_h = eps_h;
  ch.eps_g = eps_g;
  ch.h = rng.complex_normal_vector(n, eps_h);
  ch.g = rng.complex_normal_vector(n, eps_g);
  return ch;
}

ChannelRealization sample_rayleigh_miso(Eigen::Index n, Eigen::Index m, double eps_h, double eps_g,
                                        RandomStream& rng) {
  if (n < 1 || m < 1) throw std::invalid_argument("sample_rayleigh_miso: n and m must be >= 1");
  if (!(eps_h > 0.0) || !(eps_g > 0.0))
    throw std::invalid_argument("sample_rayleigh_miso: path losses must be positive");
  ChannelRealization ch;
  ch.eps_h = eps_h;
  ch.eps_g = eps_g;
  MisoGains miso;
  miso.G.resize(n, m);
  for (Eigen::Index j = 0; j < m; ++j) miso.G.col(j) = rng.complex_normal_vector(n, eps_h);
  miso.h_r = rng.complex_normal_vector(n, eps_g);
  ch.h = miso.G.col(0);
  ch.g = miso.h_r.conjugate();
  ch.miso = std::move(miso);
  return ch;
}

PhaseVector optimal_phases(const ChannelRealization& ch) {
  require_siso(ch);
  PhaseVector omega{VecD(ch.h.size()), PhaseMode{}};
  for (Eigen::Index k = 0; k < ch.h.size(); ++k)
    omega.phases(k) = wrap_phase(-(std::arg(ch.h(k)) + std::arg(ch.g(k))));
  return omega;
}

PhaseVector quantize_phases(const PhaseVector& omega, int bits) {
  if (bits < 1) throw std::invalid_argument("quantize_phases: bits must be >= 1");
  const PhaseMode mode{bits};
  const double step = mode.step();
  const auto levels = static_cast<long long>(mode.levels());
  PhaseVector out{VecD(omega.size()), mode};
  for (Eigen::Index k = 0; k < omega.size(); ++k) {
    const double p = wrap_phase(omega.phases(k));
    auto idx = static_cast<long long>(std::floor(p / step + 0.5));
    idx %= levels;
    out.phases(k) = static_cast<double>(idx) * step;
  }
  return out;
}

cd cascade_gain(const ChannelRealization& ch, const PhaseVector& omega) {
  require_siso(ch);
  require_size(ch, omega);
  cd acc{0.0, 0.0};
  for (Eigen::Index k = 0; k < ch.h.size(); ++k)
    acc += ch.g(k) * std::polar(1.0, omega.phases(k)) * ch.h(k);
  return acc;
}

double received_snr(const ChannelRealization& ch, const PhaseVector& omega, double kappa) {
  return kappa * std::norm(cascade_gain(ch, omega));
}

CompositeChannel composite_channel(const ChannelRealization& ch, double noise_var, double p_tx) {
  require_siso(ch);
  if (!(noise_var > 0.0)) throw std::invalid_argument("composite_channel: noise variance must be positive");
  CompositeChannel cc;
  cc.psi = ch.g.cwiseProduct(ch.h);
  if (cc.psi.cwiseAbs().maxCoeff() < kDegenerate)
    throw DegenerateChannel("composite_channel: all cascaded gains vanish");
  cc.noise_var = noise_var;
  cc.p_tx = p_tx;
  return cc;
}

CompositeChannel composite_channel_miso(const ChannelRealization& ch, double noise_var, double p_tx) {
  if (!ch.miso) throw std::invalid_argument("composite_channel_miso: MISO gains missing");
  if (!(noise_var > 0.0)) throw std::invalid_argument("composite_channel_miso: noise variance must be positive");
  CompositeChannel cc;
  cc.psi = ch.miso->h_r.conjugate().asDiagonal() * ch.miso->G;
  if (cc.psi.cwiseAbs().maxCoeff() < kDegenerate)
    throw DegenerateChannel("composite_channel_miso: all cascaded gains vanish");
  cc.noise_var = noise_var;
  cc.p_tx = p_tx;
  return cc;
}

double cascade_power(const CompositeChannel& cc, const PhaseVector& omega) {
  if (omega.size() != cc.size()) throw std::invalid_argument("cascade_power: dimension mismatch");
  return cascade_power(steering(omega.phases), cc.psi);
}

double received_variance(const CompositeChannel& cc, const PhaseVector& omega) {
  return cc.noise_var + cc.p_tx * cascade_power(cc, omega);
}

std::vector<LinkSample> sample_symbols(const ChannelRealization& ch, const PhaseVector& omega,
                                       Eigen::Index K, double p_tx, double sigma_w2, RandomStream& rng,
                                       std::int64_t block_id) {
  if (K < 1) throw std::invalid_argument("sample_symbols: K must be >= 1");
  if (p_tx < 0.0 || sigma_w2 < 0.0) throw std::invalid_argument("sample_symbols: negative power");
  const cd amp = std::sqrt(p_tx) * cascade_gain(ch, omega);
  std::vector<LinkSample> out;
  out.reserve(static_cast<std::size_t>(K));
  for (Eigen::Index i = 0; i < K; ++i) {
    const cd x = rng.complex_normal(1.0);
    const cd w = rng.complex_normal(sigma_w2);
    out.push_back({amp * x + w, block_id, static_cast<std::int64_t>(i)});
  }
  return out;
}

CVecD miso_effective_channel(const ChannelRealization& ch, const PhaseVector& omega) {
  if (!ch.miso) throw std::invalid_argument("miso_effective_channel: MISO gains missing");
  require_size(ch, omega);
  const CVecD weights = ch.miso->h_r.conjugate().cwiseProduct(
      omega.phases.unaryExpr([](double p) { return std::polar(1.0, p); }));
  return (weights.transpose() * ch.miso->G).transpose();
}

CVecD mrt_vector(const ChannelRealization& ch, const PhaseVector& omega) {
  const CVecD row = miso_effective_channel(ch, omega);
  const double norm = row.norm();
  if (!(norm > kDegenerate)) throw DegenerateChannel("mrt_vector: effective channel is zero");
  // u* = (h_r^H Phi G)^H / ||h_r^H Phi G||
  return row.conjugate() / norm;
}

}  // namespace cma
