#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "cma/rng.hpp"
#include "cma/solvers/sdp.hpp"

namespace cma::solvers {

// Rank-one candidates from a relaxed solution: s_tilde = Q sqrt(Sigma) f with
// f ~ CN(0, I), then s = s_tilde(1:N) / s_tilde(N+1) normalized to unit modulus.
// Trial e draws from rng.substream(e), so results do not depend on evaluation
// order. Throws NumericalFailure when S has an eigenvalue below -1e-6.
std::vector<CVecD> gaussian_randomize(const SdpSolution& sol, int trials, const RandomStream& rng);

// Phases phi_k = -arg(s_k) in [0, 2*pi), the inverse of steering().
VecD phases_from_unit_vector(const CVecD& s);

struct CandidateChoice {
  // Empty when no candidate satisfies the bounds.
  std::optional<std::size_t> index;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::size_t feasible = 0;
  // Range of |s^H psi|^2 over all candidates.
  double seen_min = std::numeric_limits<double>::infinity();
  double seen_max = -std::numeric_limits<double>::infinity();
};

// Lowest objective among candidates with lower <= value <= upper; ties go to
// the lowest index.
CandidateChoice select_best(const std::vector<double>& values, double lower, double upper);

}  // namespace cma::solvers
