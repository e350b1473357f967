#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cma/rng.hpp"
#include "cma/types.hpp"

namespace cma {

// MISO link: G is Tx->RIS (N x M), h_r is RIS->Rx (length N).
struct MisoGains {
  CMatD G;
  CVecD h_r;
};

// One fading block. h is Tx->RIS, g is RIS->Rx, both length N.
struct ChannelRealization {
  CVecD h;
  CVecD g;
  double eps_h = 1.0;
  double eps_g = 1.0;
  std::optional<MisoGains> miso;

  Eigen::Index size() const { return miso ? miso->h_r.size() : h.size(); }
  bool has_siso() const { return h.size() > 0 && h.size() == g.size(); }
};

// Phase resolution: bits == 0 means continuous phases.
struct PhaseMode {
  int bits = 0;
  bool discrete() const { return bits > 0; }
  int levels() const { return 1 << bits; }
  double step() const { return kTwoPi / levels(); }
  friend bool operator==(PhaseMode, PhaseMode) = default;
};

// RIS configuration Omega; phases live in [0, 2*pi).
struct PhaseVector {
  VecD phases;
  PhaseMode mode;

  Eigen::Index size() const { return phases.size(); }
};

// psi_k = g_k h_k (N x 1) for SISO, diag(h_r^H) G (N x M) for MISO. The
// received amplitude is s^H psi where s_k = exp(-j phi_k); g holds the
// RIS-to-receiver gains in the orientation that makes phi_k = -(theta_k + psi_k)
// coherent.
struct CompositeChannel {
  CMatD psi;
  double noise_var = 1.0;
  double p_tx = 1.0;

  Eigen::Index size() const { return psi.rows(); }
  Eigen::Index antennas() const { return psi.cols(); }
  double snr_scale() const { return p_tx / noise_var; }
  // Column view for the SISO case.
  CVecD vector() const { return psi.col(0); }
};

struct LinkSample {
  cd y;
  std::int64_t block_id = 0;
  std::int64_t symbol_index = 0;
};

// Unit-modulus vector s with s_k = exp(-j phi_k), so s^H psi = sum exp(j phi_k) psi_k.
template <class Derived>
CVec<typename Derived::Scalar> steering(const Eigen::MatrixBase<Derived>& phases) {
  using F = typename Derived::Scalar;
  return phases.unaryExpr([](F p) { return std::polar(F(1), -p); });
}

// Squared cascade gain |s^H psi|^2 (Frobenius over antennas for MISO).
template <class DerivedS, class DerivedPsi>
auto cascade_power(const Eigen::MatrixBase<DerivedS>& s, const Eigen::MatrixBase<DerivedPsi>& psi) {
  return (s.adjoint() * psi).squaredNorm();
}

ChannelRealization sample_rayleigh(Eigen::Index n, double eps_h, double eps_g, RandomStream& rng);

// Rayleigh MISO link with M transmit antennas; also fills the SISO fields
// from column 0 of G so M = 1 reduces to the single-antenna model.
ChannelRealization sample_rayleigh_miso(Eigen::Index n, Eigen::Index m, double eps_h, double eps_g,
                                        RandomStream& rng);

// Coherent phases phi_k = -(theta_k + psi_k).
PhaseVector optimal_phases(const ChannelRealization& ch);

// Nearest point of the b-bit codebook, ties toward the larger phase.
PhaseVector quantize_phases(const PhaseVector& omega, int bits);

// kappa * |g^H Phi h|^2 computed from raw gains.
double received_snr(const ChannelRealization& ch, const PhaseVector& omega, double kappa);

// g^H Phi h from raw gains.
cd cascade_gain(const ChannelRealization& ch, const PhaseVector& omega);

CompositeChannel composite_channel(const ChannelRealization& ch, double noise_var, double p_tx);
CompositeChannel composite_channel_miso(const ChannelRealization& ch, double noise_var, double p_tx);

// |s^H psi|^2 (SISO) or ||s^H psi||^2 (MISO) for a phase configuration.
double cascade_power(const CompositeChannel& cc, const PhaseVector& omega);

// Received-signal variance sigma_w^2 + P |s^H psi|^2.
double received_variance(const CompositeChannel& cc, const PhaseVector& omega);

// K draws of y = sqrt(P) (g^H Phi h) x + w.
std::vector<LinkSample> sample_symbols(const ChannelRealization& ch, const PhaseVector& omega,
                                       Eigen::Index K, double p_tx, double sigma_w2, RandomStream& rng,
                                       std::int64_t block_id = 0);

// Maximal-ratio transmit vector for the MISO link under Omega.
CVecD mrt_vector(const ChannelRealization& ch, const PhaseVector& omega);

// Effective MISO row h_r^H Phi G.
CVecD miso_effective_channel(const ChannelRealization& ch, const PhaseVector& omega);

}  // namespace cma
