#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cma/solvers/sdp.hpp"

namespace cma::solvers {

namespace {

// Largest alpha with X + alpha dX >= 0 (infinity when dX >= 0).
double max_step_psd(const CMatD& X, const CMatD& dX) {
  Eigen::LLT<CMatD> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const auto Lc = llt.matrixL();
  const CMatD T = Lc.solve(dX);
  CMatD M = Lc.solve(T.adjoint());
  M = 0.5 * (M + M.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatD> es(M, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

double trace_prod(const CMatD& A, const CMatD& B) { return A.cwiseProduct(B.transpose()).real().sum(); }

}  // namespace

// Block structure: X = diag(S, t_1, ..., t_k) where the scalar slacks turn the
// trace bounds into equalities Tr(L S) - t_l = nu and Tr(L S) + t_u = nu_upper.
SdpSolution solve_unit_diag_sdp_ipm(const UnitDiagSdp& prob, double tol, int max_iter) {
  const CMatD& L0 = prob.L;
  const Eigen::Index n = L0.rows();
  if (n < 1 || L0.cols() != n) throw std::invalid_argument("solve_unit_diag_sdp_ipm: L must be square");
  if ((L0 - L0.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, L0.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("solve_unit_diag_sdp_ipm: L is not Hermitian");

  SdpSolution sol;
  sol.interior_point = true;
  const double scale = std::max(L0.cwiseAbs().maxCoeff(), 1e-300);
  const CMatD L = L0 / scale;

  // Trace rows: coefficient of the slack in each row.
  std::vector<double> rhs_trace, slack_coef;
  if (std::isfinite(prob.nu)) {
    rhs_trace.push_back(prob.nu / scale);
    slack_coef.push_back(-1.0);
  }
  if (std::isfinite(prob.nu_upper)) {
    rhs_trace.push_back(prob.nu_upper / scale);
    slack_coef.push_back(1.0);
  }
  const int k = static_cast<int>(slack_coef.size());
  const Eigen::Index m = n + k;

  CMatD X = CMatD::Identity(n, n);
  CMatD Z = CMatD::Identity(n, n);
  VecD t = VecD::Ones(k);
  VecD z = VecD::Ones(k);
  VecD y = VecD::Zero(m);

  VecD b(m);
  b.head(n).setOnes();
  for (int j = 0; j < k; ++j) b(n + j) = rhs_trace[j];

  auto apply_A = [&](const CMatD& S, const VecD& s) {
    VecD r(m);
    r.head(n) = S.diagonal().real();
    const double tr = trace_prod(L, S);
    for (int j = 0; j < k; ++j) r(n + j) = tr + slack_coef[j] * s(j);
    return r;
  };
  auto apply_At = [&](const VecD& v, CMatD& S, VecD& s) {
    S = CMatD::Zero(n, n);
    S.diagonal() = v.head(n).cast<cd>();
    double lsum = 0.0;
    for (int j = 0; j < k; ++j) lsum += v(n + j);
    S += lsum * L;
    s.resize(k);
    for (int j = 0; j < k; ++j) s(j) = slack_coef[j] * v(n + j);
  };

  const double bnorm = 1.0 + b.norm();
  const double cnorm = 1.0 + L.norm();
  bool converged = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    CMatD AtyS;
    VecD Atys;
    apply_At(y, AtyS, Atys);
    const VecD rp = b - apply_A(X, t);
    CMatD Rd = L - AtyS - Z;
    Rd = 0.5 * (Rd + Rd.adjoint()).eval();
    const VecD rd = -Atys - z;

    const double xz = trace_prod(X, Z) + t.dot(z);
    const double pobj = trace_prod(L, X);
    const double dobj = b.dot(y);
    const double pinf = rp.norm() / bnorm;
    const double dinf = std::sqrt(Rd.squaredNorm() + rd.squaredNorm()) / cnorm;
    const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (pinf <= tol && dinf <= tol && rel_gap <= tol && xz / (n + k) <= tol) {
      converged = true;
      break;
    }

    Eigen::LLT<CMatD> zllt(Z);
    if (zllt.info() != Eigen::Success) break;
    const CMatD Zi = zllt.solve(CMatD::Identity(n, n));
    const VecD zi = z.cwiseInverse();

    auto solve_direction = [&](double mu, CMatD& dX, VecD& dt, CMatD& dZ, VecD& dz, VecD& dy) {
      MatD M = MatD::Zero(m, m);
      const CMatD ZiL = Zi * L;
      const CMatD ZiLX = ZiL * X;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) M(i, j) = std::real(Zi(i, j) * X(j, i));
      const double tll = trace_prod(ZiLX, L);
      for (int a = 0; a < k; ++a) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double v = std::real(ZiLX(i, i));
          M(i, n + a) = v;
          M(n + a, i) = v;
        }
        for (int c = 0; c < k; ++c) M(n + a, n + c) = tll + (a == c ? t(a) * zi(a) : 0.0);
      }
      CMatD E = mu * Zi - X - Zi * Rd * X;
      E = 0.5 * (E + E.adjoint()).eval();
      VecD e(k);
      for (int j = 0; j < k; ++j) e(j) = mu * zi(j) - t(j) - t(j) * zi(j) * rd(j);
      const VecD rhs = rp - apply_A(E, e);
      dy = M.ldlt().solve(rhs);
      CMatD AtdS;
      VecD Atds;
      apply_At(dy, AtdS, Atds);
      dZ = Rd - AtdS;
      dz = rd - Atds;
      dX = mu * Zi - X - Zi * dZ * X;
      dX = 0.5 * (dX + dX.adjoint()).eval();
      dt.resize(k);
      for (int j = 0; j < k; ++j) dt(j) = mu * zi(j) - t(j) - t(j) * zi(j) * dz(j);
    };

    auto step_lengths = [&](const CMatD& dX, const VecD& dt, const CMatD& dZ, const VecD& dz, double& ap,
                            double& ad) {
      ap = std::min(1.0, max_step_psd(X, dX));
      ad = std::min(1.0, max_step_psd(Z, dZ));
      for (int j = 0; j < k; ++j) {
        if (dt(j) < 0.0) ap = std::min(ap, -t(j) / dt(j));
        if (dz(j) < 0.0) ad = std::min(ad, -z(j) / dz(j));
      }
    };

    // Mehrotra-style predictor to pick the centering weight.
    CMatD dX, dZ;
    VecD dt, dz, dy;
    solve_direction(0.0, dX, dt, dZ, dz, dy);
    double ap = 0.0, ad = 0.0;
    step_lengths(dX, dt, dZ, dz, ap, ad);
    const double xz_aff = trace_prod(X + ap * dX, Z + ad * dZ) + (t + ap * dt).dot(z + ad * dz);
    const double sigma = std::clamp(std::pow(std::max(xz_aff, 0.0) / xz, 3.0), 1e-3, 0.9);
    solve_direction(sigma * xz / (n + k), dX, dt, dZ, dz, dy);
    step_lengths(dX, dt, dZ, dz, ap, ad);
    ap = std::min(1.0, 0.95 * ap);
    ad = std::min(1.0, 0.95 * ad);
    if (ap < 1e-12 && ad < 1e-12) break;

    X += ap * dX;
    X = 0.5 * (X + X.adjoint()).eval();
    t += ap * dt;
    Z += ad * dZ;
    Z = 0.5 * (Z + Z.adjoint()).eval();
    z += ad * dz;
    y += ad * dy;
  }

  sol.iterations = it;
  sol.S = X;
  sol.objective = trace_prod(L, X) * scale;
  sol.lower_bound = b.dot(y) * scale;
  sol.gap = sol.objective - sol.lower_bound;
  const double diag_err = (X.diagonal().array() - cd(1.0)).abs().maxCoeff();
  const double low = std::isfinite(prob.nu) ? std::max(0.0, prob.nu - sol.objective) : 0.0;
  const double high = std::max(0.0, sol.objective - prob.nu_upper);
  sol.max_constraint_violation = std::max({diag_err, low, high});
  sol.status = converged ? SdpStatus::Optimal : SdpStatus::MaxIter;
  return sol;
}

}  // namespace cma::solvers
