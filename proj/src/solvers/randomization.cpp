#include "cma/solvers/randomization.hpp"

#include <cmath>
#include <stdexcept>

namespace cma::solvers {

std::vector<CVecD> gaussian_randomize(const SdpSolution& sol, int trials, const RandomStream& rng) {
  if (trials < 1) throw std::invalid_argument("gaussian_randomize: trials must be >= 1");
  if (sol.S.rows() < 2 || sol.S.rows() != sol.S.cols())
    throw std::invalid_argument("gaussian_randomize: solution matrix missing");
  const Eigen::Index n = sol.S.rows();

  CMatD S = 0.5 * (sol.S + sol.S.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatD> es(S);
  if (es.info() != Eigen::Success) throw NumericalFailure("gaussian_randomize: eigendecomposition failed");
  const VecD lam = es.eigenvalues();
  if (lam.minCoeff() < -1e-6) throw NumericalFailure("gaussian_randomize: S is not positive semidefinite");

  // Keep only numerically nonzero directions; Q sqrt(Sigma) restricted to them.
  const double cut = std::max(lam.maxCoeff(), 0.0) * 1e-12;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (lam(i) > cut) keep.push_back(i);
  CMatD F(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    F.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]) * std::sqrt(lam(keep[j]));

  std::vector<CVecD> out;
  out.reserve(static_cast<std::size_t>(trials));
  for (int e = 0; e < trials; ++e) {
    RandomStream sub = rng.substream(static_cast<std::uint64_t>(e));
    const CVecD f = sub.complex_normal_vector(F.cols());
    const CVecD st = F * f;
    cd ref = st(n - 1);
    if (std::abs(ref) < 1e-300) ref = 1.0;
    CVecD s(n - 1);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      const cd v = st(k) / ref;
      const double a = std::abs(v);
      s(k) = a > 1e-300 ? v / a : cd(1.0);
    }
    out.push_back(std::move(s));
  }
  return out;
}

VecD phases_from_unit_vector(const CVecD& s) {
  VecD p(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) p(k) = wrap_phase(-std::arg(s(k)));
  return p;
}

CandidateChoice select_best(const std::vector<double>& values, double lower, double upper) {
  CandidateChoice c;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    c.seen_min = std::min(c.seen_min, v);
    c.seen_max = std::max(c.seen_max, v);
    if (!(v >= lower && v <= upper)) continue;
    ++c.feasible;
    if (!c.index || v < c.objective) {
      c.index = i;
      c.objective = v;
    }
  }
  return c;
}

}  // namespace cma::solvers
