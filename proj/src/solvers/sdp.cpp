#include "cma/solvers/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cma/rng.hpp"

namespace cma::solvers {

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::MaxIter: return "max-iter";
  }
  return "unknown";
}

UnitDiagSdp make_unit_diag_sdp(const CMatD& psi, double nu, double nu_upper) {
  if (psi.rows() < 1 || psi.cols() < 1) throw std::invalid_argument("make_unit_diag_sdp: empty channel");
  const Eigen::Index n = psi.rows() + 1;
  UnitDiagSdp p;
  p.factor = CMatD::Zero(n, psi.cols());
  p.factor.topRows(psi.rows()) = psi;
  p.L = p.factor * p.factor.adjoint();
  p.nu = nu;
  p.nu_upper = nu_upper;
  return p;
}

namespace {

// (L / scale) V, through the factor when one is available.
struct LinOp {
  const CMatD& L;
  const CMatD& W;
  double scale = 1.0;

  CMatD apply(const CMatD& V) const {
    if (W.size() > 0) return W * (W.adjoint() * V) / scale;
    return L * V / scale;
  }
};

double trace_form(const CMatD& V, const CMatD& LV) { return V.conjugate().cwiseProduct(LV).real().sum(); }

double inner(const CMatD& a, const CMatD& b) { return a.conjugate().cwiseProduct(b).real().sum(); }

void normalize_rows(CMatD& V) {
  for (Eigen::Index i = 0; i < V.rows(); ++i) {
    const double nr = V.row(i).norm();
    if (nr < 1e-300) {
      V.row(i).setZero();
      V(i, 0) = 1.0;
    } else {
      V.row(i) /= nr;
    }
  }
}

CMatD random_factor(Eigen::Index n, Eigen::Index p, RandomStream& rng) {
  CMatD V(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) V(i, j) = rng.complex_normal();
  normalize_rows(V);
  return V;
}

// Tangent projection on the product of unit spheres (one per row).
CMatD project(const CMatD& V, const CMatD& G) {
  const VecD d = G.cwiseProduct(V.conjugate()).real().rowwise().sum();
  return G - d.cast<cd>().asDiagonal() * V;
}

struct DescentResult {
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Riemannian gradient descent with Barzilai-Borwein steps and Armijo
// backtracking. obj(V, G) returns the value and writes the Euclidean gradient.
template <class Obj>
DescentResult riemannian_descent(CMatD& V, Obj&& obj, double gtol, int max_iter) {
  DescentResult res;
  CMatD G;
  double fv = obj(V, G);
  CMatD R = project(V, G);
  double alpha = 1.0;
  CMatD Vn, Gn;
  double f_mark = fv;
  for (int it = 0; it < max_iter; ++it) {
    // Stall exit: negligible progress over a long stretch of iterations.
    if (it > 0 && it % 200 == 0) {
      if (f_mark - fv <= 1e-15 * std::max(1.0, std::abs(fv))) {
        res.iterations = it;
        res.grad_norm = R.norm();
        res.converged = res.grad_norm <= gtol * 1e3;
        return res;
      }
      f_mark = fv;
    }
    const double gn2 = R.squaredNorm();
    res.grad_norm = std::sqrt(gn2);
    res.iterations = it;
    if (res.grad_norm <= gtol) {
      res.converged = true;
      return res;
    }
    double t = alpha;
    double fn = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Vn = V - t * R;
      normalize_rows(Vn);
      fn = obj(Vn, Gn);
      if (fn <= fv - 1e-4 * t * gn2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No decrease representable at this precision: treat as converged.
      res.converged = res.grad_norm <= gtol * 1e3;
      return res;
    }
    CMatD Rn = project(Vn, Gn);
    const CMatD s = Vn - V;
    const CMatD y = Rn - R;
    const double sy = inner(s, y);
    alpha = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * t;
    alpha = std::clamp(alpha, 1e-8, 1e8);
    V.swap(Vn);
    G.swap(Gn);
    R.swap(Rn);
    fv = fn;
  }
  res.iterations = max_iter;
  res.grad_norm = R.norm();
  res.converged = res.grad_norm <= gtol;
  return res;
}

void check_problem(const UnitDiagSdp& prob) {
  const auto& L = prob.L;
  if (L.rows() < 1 || L.rows() != L.cols()) throw std::invalid_argument("solve_unit_diag_sdp: L must be square");
  if (!L.allFinite()) throw std::invalid_argument("solve_unit_diag_sdp: L has non-finite entries");
  const double lmax = L.cwiseAbs().maxCoeff();
  if ((L - L.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, lmax))
    throw std::invalid_argument("solve_unit_diag_sdp: L is not Hermitian");
  if (prob.factor.size() > 0 && prob.factor.rows() != L.rows())
    throw std::invalid_argument("solve_unit_diag_sdp: factor has the wrong row count");
  if (std::isnan(prob.nu) || std::isnan(prob.nu_upper))
    throw std::invalid_argument("solve_unit_diag_sdp: NaN trace bound");
}

// Dual bound for min Tr(L S), diag(S) = 1, from the sphere multipliers of V:
// y_i = Re <(L V)_i, V_i>, Z = L - diag(y), bound = sum(y) + n min(0, lambda_min(Z)).
double dual_bound(const CMatD& Ls, const CMatD& V, const CMatD& LV) {
  const VecD y = LV.cwiseProduct(V.conjugate()).real().rowwise().sum();
  CMatD Z = Ls;
  Z.diagonal() -= y.cast<cd>();
  Eigen::SelfAdjointEigenSolver<CMatD> es(Z, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return y.sum() + static_cast<double>(Ls.rows()) * std::min(0.0, lmin);
}

// Unit-modulus phases of L's leading eigenvector in column 0, plus a small
// random perturbation in the remaining columns so descent can leave rank one.
CMatD leading_phase_start(const CMatD& L, Eigen::Index p, RandomStream& rng) {
  Eigen::SelfAdjointEigenSolver<CMatD> es(L);
  const CVecD u = es.eigenvectors().col(L.rows() - 1);
  CMatD V = CMatD::Zero(L.rows(), p);
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    V(i, 0) = std::abs(u(i)) > 1e-150 ? u(i) / std::abs(u(i)) : cd(1.0);
    for (Eigen::Index j = 1; j < p; ++j) V(i, j) = 1e-6 * rng.complex_normal();
  }
  normalize_rows(V);
  return V;
}

void grow_rank(CMatD& V, Eigen::Index p, RandomStream& rng) {
  const Eigen::Index old = V.cols();
  if (p <= old) return;
  CMatD W = CMatD::Zero(V.rows(), p);
  W.leftCols(old) = V;
  for (Eigen::Index j = old; j < p; ++j)
    for (Eigen::Index i = 0; i < V.rows(); ++i) W(i, j) = 1e-3 * rng.complex_normal();
  normalize_rows(W);
  V.swap(W);
}

}  // namespace

SdpSolution solve_unit_diag_sdp(const UnitDiagSdp& prob, double tol) {
  SdpOptions opts;
  opts.tol = tol;
  return solve_unit_diag_sdp(prob, opts);
}

SdpSolution solve_unit_diag_sdp(const UnitDiagSdp& prob, const SdpOptions& opts) {
  check_problem(prob);
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_unit_diag_sdp: tol must be positive");
  const auto& L = prob.L;
  const Eigen::Index n = L.rows();
  SdpSolution sol;

  if (L.cwiseAbs().maxCoeff() == 0.0) {
    sol.S = CMatD::Identity(n, n);
    sol.V = sol.S;
    const bool ok = prob.nu <= 0.0 && prob.nu_upper >= 0.0;
    sol.status = ok ? SdpStatus::Optimal : SdpStatus::Infeasible;
    sol.max_constraint_violation = std::max({0.0, prob.nu, -prob.nu_upper});
    return sol;
  }
  if (prob.nu > prob.nu_upper) {
    sol.status = SdpStatus::Infeasible;
    return sol;
  }

  RandomStream rng(opts.seed);
  Eigen::Index p = opts.rank > 0 ? std::min<Eigen::Index>(opts.rank, n)
                                 : std::min<Eigen::Index>(n, static_cast<Eigen::Index>(std::ceil(std::sqrt(2.0 * n))));

  // Scale so that the largest achievable trace is of order one.
  double scale = L.diagonal().real().sum();
  if (!(scale > 0.0)) scale = L.cwiseAbs().maxCoeff() * static_cast<double>(n);
  LinOp op{L, prob.factor, scale};
  const double gtol = 1e-10;

  // Upper end of the achievable range: minimize -Tr(L S).
  CMatD Vmax = leading_phase_start(L, p, rng);
  auto max_obj = [&](const CMatD& V, CMatD& G) {
    const CMatD LV = op.apply(V);
    G = -2.0 * LV;
    return -trace_form(V, LV);
  };
  // Only the value matters here and its error is second order in the gradient.
  auto rmax = riemannian_descent(Vmax, max_obj, 1e-7, opts.max_inner);
  sol.iterations += rmax.iterations;
  const double fmax_s = trace_form(Vmax, op.apply(Vmax));
  sol.achievable_max = fmax_s * scale;

  // Rescale around the maximum.
  const double rescale = fmax_s > 0.0 ? fmax_s : 1.0;
  scale *= rescale;
  op.scale = scale;
  const CMatD Ls = L / scale;
  const double fmax = fmax_s / rescale;
  const double nu = prob.nu / scale;
  const double nu_up = prob.nu_upper / scale;
  const double tol = opts.tol;

  if (nu > fmax * (1.0 + 1e-9) + 1e-12) {
    sol.status = SdpStatus::Infeasible;
    sol.S = Vmax * Vmax.adjoint();
    sol.V = Vmax;
    sol.objective = sol.achievable_max;
    sol.max_constraint_violation = prob.nu - sol.achievable_max;
    // Still report the low end of the range.
    CMatD Vmin = random_factor(n, p, rng);
    auto min_obj = [&](const CMatD& V, CMatD& G) {
      const CMatD LV = op.apply(V);
      G = 2.0 * LV;
      return trace_form(V, LV);
    };
    riemannian_descent(Vmin, min_obj, gtol, opts.max_inner);
    sol.achievable_min = trace_form(Vmin, op.apply(Vmin)) * scale;
    return sol;
  }

  // Augmented Lagrangian on nu - Tr(L S) <= 0.
  CMatD V = random_factor(n, p, rng);
  double lambda = 0.0;
  double mu = 10.0;
  double prev_viol = std::numeric_limits<double>::infinity();
  double f = 0.0;
  double unconstrained_min = std::numeric_limits<double>::quiet_NaN();
  double lb = -std::numeric_limits<double>::infinity();
  const bool have_nu = std::isfinite(nu);

  for (int attempt = 0; attempt < 4; ++attempt) {
    lambda = 0.0;
    mu = 10.0;
    prev_viol = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < opts.max_outer; ++outer) {
      auto al_obj = [&](const CMatD& X, CMatD& G) {
        const CMatD LX = op.apply(X);
        const double fx = trace_form(X, LX);
        const double h = have_nu ? std::max(0.0, lambda + mu * (nu - fx)) : 0.0;
        G = 2.0 * (1.0 - h) * LX;
        return fx + (h * h - lambda * lambda) / (2.0 * mu);
      };
      auto r = riemannian_descent(V, al_obj, gtol, opts.max_inner);
      sol.iterations += r.iterations;
      f = trace_form(V, op.apply(V));
      const double c = have_nu ? nu - f : -1.0;
      const double viol = std::max(0.0, c);
      const double next = have_nu ? std::max(0.0, lambda + mu * c) : 0.0;
      const bool settled = viol <= 0.1 * tol && std::abs(next - lambda) <= std::max(tol, 1e-6);
      lambda = next;
      if (settled && r.converged) break;
      if (viol > 0.25 * prev_viol) mu = std::min(mu * 10.0, 1e10);
      prev_viol = viol;
    }

    // Feasibility restoration: blend toward the maximizer so Tr(L S) = nu exactly.
    if (have_nu && f < nu) {
      const double t = std::clamp((nu - f) / std::max(fmax - f, 1e-300), 0.0, 1.0);
      CMatD W(n, V.cols() + Vmax.cols());
      W << std::sqrt(1.0 - t) * V, std::sqrt(t) * Vmax;
      V.swap(W);
      f = trace_form(V, op.apply(V));
    }

    const CMatD LV = op.apply(V);
    lb = dual_bound(Ls, V, LV);
    if (have_nu) lb = std::max(lb, nu);
    if (lambda == 0.0) unconstrained_min = f;
    if (f - lb <= tol * std::max(1.0, std::abs(f))) break;
    if (V.cols() >= n) break;
    grow_rank(V, std::min<Eigen::Index>(n, V.cols() + std::max<Eigen::Index>(2, V.cols() / 2)), rng);
  }

  sol.V = V;
  sol.S = V * V.adjoint();
  sol.objective = f * scale;
  sol.lower_bound = lb * scale;
  sol.gap = sol.objective - sol.lower_bound;

  if (std::isnan(unconstrained_min)) {
    CMatD Vmin = random_factor(n, p, rng);
    auto min_obj = [&](const CMatD& X, CMatD& G) {
      const CMatD LX = op.apply(X);
      G = 2.0 * LX;
      return trace_form(X, LX);
    };
    riemannian_descent(Vmin, min_obj, gtol, opts.max_inner);
    unconstrained_min = std::min(trace_form(Vmin, op.apply(Vmin)), f);
  }
  sol.achievable_min = unconstrained_min * scale;

  const double diag_err = (sol.S.diagonal().array() - cd(1.0)).abs().maxCoeff();
  const double low = have_nu ? std::max(0.0, prob.nu - sol.objective) : 0.0;
  const double high = std::max(0.0, sol.objective - prob.nu_upper);
  sol.max_constraint_violation = std::max({diag_err, low, high});

  if (f > nu_up * (1.0 + 1e-9) + 1e-12) {
    sol.status = SdpStatus::Infeasible;
    return sol;
  }
  // Tolerances are relative to the top of the achievable range.
  const bool gap_ok = f - lb <= tol;
  const bool feas_ok = low <= tol * scale && diag_err <= 1e-9;
  sol.status = gap_ok && feas_ok ? SdpStatus::Optimal : SdpStatus::MaxIter;

  if (sol.status != SdpStatus::Optimal && opts.ipm_fallback && n <= 30) {
    SdpSolution ipm = solve_unit_diag_sdp_ipm(prob, std::min(tol, 1e-8));
    if (ipm.optimal()) {
      ipm.achievable_min = sol.achievable_min;
      ipm.achievable_max = sol.achievable_max;
      ipm.iterations += sol.iterations;
      return ipm;
    }
  }
  return sol;
}

}  // namespace cma::solvers
