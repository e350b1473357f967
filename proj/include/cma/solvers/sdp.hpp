#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "cma/types.hpp"

namespace cma::solvers {

// min Tr(L S)  s.t.  S_kk = 1, S >= 0, nu <= Tr(L S) <= nu_upper.
// For the phase-attack relaxation L = [psi psi^H 0; 0 0]; `factor` keeps
// W = [psi; 0] so products with L cost O(n rank(psi)).
struct UnitDiagSdp {
  CMatD L;
  CMatD factor;
  double nu = 0.0;
  double nu_upper = std::numeric_limits<double>::infinity();

  Eigen::Index size() const { return L.rows(); }
};

// Bordered construction from the composite channel (N x M).
UnitDiagSdp make_unit_diag_sdp(const CMatD& psi, double nu,
                               double nu_upper = std::numeric_limits<double>::infinity());

enum class SdpStatus { Optimal, Infeasible, MaxIter };

std::string to_string(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::MaxIter;
  CMatD S;
  // Low-rank factor with S = V V^H (empty when the interior-point path produced S).
  CMatD V;
  double objective = 0.0;
  // Certified lower bound on the relaxation optimum from the dual.
  double lower_bound = 0.0;
  double max_constraint_violation = 0.0;
  // Duality gap objective - lower_bound.
  double gap = 0.0;
  // Range of Tr(L S) over the relaxation's unit-diagonal feasible set.
  double achievable_min = 0.0;
  double achievable_max = 0.0;
  int iterations = 0;
  bool interior_point = false;

  bool optimal() const { return status == SdpStatus::Optimal; }
};

struct SdpOptions {
  double tol = 1e-7;
  // 0 selects min(n, ceil(sqrt(2 n))).
  int rank = 0;
  int max_outer = 60;
  int max_inner = 20000;
  std::uint64_t seed = 0x5d9u;
  // Dense interior-point fallback for n <= 30 when the factored solver stalls.
  bool ipm_fallback = true;
};

// Burer-Monteiro factorization S = V V^H with an augmented Lagrangian for the
// trace constraint and Riemannian gradient steps on the product of spheres.
SdpSolution solve_unit_diag_sdp(const UnitDiagSdp& prob, const SdpOptions& opts);
SdpSolution solve_unit_diag_sdp(const UnitDiagSdp& prob, double tol = 1e-7);

// Dense primal-dual path-following (HKM direction). Intended for n <= 30.
SdpSolution solve_unit_diag_sdp_ipm(const UnitDiagSdp& prob, double tol = 1e-8, int max_iter = 200);

}  // namespace cma::solvers
