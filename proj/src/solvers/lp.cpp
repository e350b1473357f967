#include "cma/solvers/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cma::solvers {

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::MaxIter: return "max-iter";
  }
  return "unknown";
}

namespace {

constexpr double kInfty = std::numeric_limits<double>::infinity();

// How an original variable maps onto nonnegative standard-form columns.
struct VarMap {
  int pos = -1;  // column of z with coefficient +1 (x = offset + z)
  int neg = -1;  // column with coefficient -1
  double offset = 0.0;
};

// Standard form  min c^T z, A z = b (b >= 0), z >= 0.
struct Standard {
  SpMat A;
  VecD b;
  VecD c;
  std::vector<VarMap> vars;
  std::vector<double> row_sign;  // +1 or -1 applied to make b >= 0
  int n_eq = 0;
  int n_ub = 0;
  int n_bound = 0;
  int n_struct = 0;      // structural z columns
  int slack_begin = 0;   // slack columns for ub and bound rows
  int artificial_begin = 0;
};

Standard to_standard(const LpProblem& p) {
  const Eigen::Index n = p.num_vars();
  const bool has_lower = p.lower.size() > 0;
  const bool has_upper = p.upper.size() > 0;
  Standard s;
  s.n_eq = static_cast<int>(p.A_eq.rows());
  s.n_ub = static_cast<int>(p.A_ub.rows());
  s.vars.resize(static_cast<std::size_t>(n));

  std::vector<int> bound_rows;  // variable index for each extra bound row
  int col = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lo = has_lower ? p.lower(j) : 0.0;
    const double hi = has_upper ? p.upper(j) : kInfty;
    VarMap& v = s.vars[static_cast<std::size_t>(j)];
    if (std::isfinite(lo)) {
      v.offset = lo;
      v.pos = col++;
      if (std::isfinite(hi)) bound_rows.push_back(static_cast<int>(j));
    } else if (std::isfinite(hi)) {
      v.offset = hi;
      v.neg = col++;
    } else {
      v.pos = col++;
      v.neg = col++;
    }
  }
  s.n_struct = col;
  s.n_bound = static_cast<int>(bound_rows.size());
  const int m = s.n_eq + s.n_ub + s.n_bound;
  const int n_slack = s.n_ub + s.n_bound;
  s.slack_begin = s.n_struct;
  s.artificial_begin = s.slack_begin + n_slack;

  VecD offset(n);
  for (Eigen::Index j = 0; j < n; ++j) offset(j) = s.vars[static_cast<std::size_t>(j)].offset;

  VecD rhs(m);
  if (s.n_eq > 0) rhs.head(s.n_eq) = p.b_eq - p.A_eq * offset;
  if (s.n_ub > 0) rhs.segment(s.n_eq, s.n_ub) = p.b_ub - p.A_ub * offset;
  for (int k = 0; k < s.n_bound; ++k) {
    const int j = bound_rows[static_cast<std::size_t>(k)];
    rhs(s.n_eq + s.n_ub + k) = p.upper(j) - p.lower(j);
  }
  s.row_sign.assign(static_cast<std::size_t>(m), 1.0);
  for (int i = 0; i < m; ++i)
    if (rhs(i) < 0.0) s.row_sign[static_cast<std::size_t>(i)] = -1.0;

  std::vector<Eigen::Triplet<double>> trip;
  auto emit = [&](int row, Eigen::Index j, double v) {
    const VarMap& vm = s.vars[static_cast<std::size_t>(j)];
    const double sg = s.row_sign[static_cast<std::size_t>(row)];
    if (vm.pos >= 0) trip.emplace_back(row, vm.pos, sg * v);
    if (vm.neg >= 0) trip.emplace_back(row, vm.neg, -sg * v);
  };
  for (Eigen::Index j = 0; j < p.A_eq.outerSize(); ++j)
    for (SpMat::InnerIterator it(p.A_eq, j); it; ++it) emit(static_cast<int>(it.row()), j, it.value());
  for (Eigen::Index j = 0; j < p.A_ub.outerSize(); ++j)
    for (SpMat::InnerIterator it(p.A_ub, j); it; ++it) emit(s.n_eq + static_cast<int>(it.row()), j, it.value());
  for (int k = 0; k < s.n_bound; ++k) emit(s.n_eq + s.n_ub + k, bound_rows[static_cast<std::size_t>(k)], 1.0);
  for (int k = 0; k < n_slack; ++k) {
    const int row = s.n_eq + k;
    trip.emplace_back(row, s.slack_begin + k, s.row_sign[static_cast<std::size_t>(row)]);
  }
  // One artificial per row; rows whose slack enters with +1 start from the slack instead.
  for (int i = 0; i < m; ++i) trip.emplace_back(i, s.artificial_begin + i, 1.0);

  const int total = s.artificial_begin + m;
  s.A.resize(m, total);
  s.A.setFromTriplets(trip.begin(), trip.end());
  s.A.makeCompressed();
  s.b = rhs.cwiseAbs();

  s.c = VecD::Zero(total);
  for (Eigen::Index j = 0; j < n; ++j) {
    const VarMap& vm = s.vars[static_cast<std::size_t>(j)];
    if (vm.pos >= 0) s.c(vm.pos) = p.c(j);
    if (vm.neg >= 0) s.c(vm.neg) = -p.c(j);
  }
  return s;
}

class Simplex {
public:
  Simplex(const Standard& s, const LpOptions& o) : s_(s), o_(o), m_(static_cast<int>(s.A.rows())) {}

  // Returns status of the phase; cost vector selects phase 1 or phase 2.
  LpStatus run(const VecD& cost, const std::vector<char>& allowed, int& iterations) {
    int degenerate = 0;
    bool bland = false;
    for (int since_refactor = 0;; ++since_refactor) {
      if (iterations >= o_.max_iter) return LpStatus::MaxIter;
      if (since_refactor >= o_.refactor_every) {
        refactor();
        since_refactor = 0;
      }
      VecD cb(m_);
      for (int i = 0; i < m_; ++i) cb(i) = cost(basis_[i]);
      pi_ = Binv_.transpose() * cb;

      int enter = -1;
      double best = -o_.opt_tol;
      for (int j = 0; j < static_cast<int>(s_.A.cols()); ++j) {
        if (in_basis_[j] || !allowed[j]) continue;
        double d = cost(j);
        for (SpMat::InnerIterator it(s_.A, j); it; ++it) d -= pi_(it.row()) * it.value();
        if (d < best) {
          enter = j;
          if (bland) break;
          best = d;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      VecD a = VecD::Zero(m_);
      for (SpMat::InnerIterator it(s_.A, enter); it; ++it) a(it.row()) = it.value();
      const VecD w = Binv_ * a;

      int leave = -1;
      double ratio = kInfty;
      for (int i = 0; i < m_; ++i) {
        if (w(i) <= o_.pivot_tol) continue;
        const double r = std::max(xb_(i), 0.0) / w(i);
        const bool better = r < ratio - 1e-12 ||
                            (r <= ratio + 1e-12 && leave >= 0 &&
                             (bland ? basis_[i] < basis_[leave] : w(i) > w(leave)));
        if (leave < 0 || better) {
          leave = i;
          ratio = r;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;

      if (ratio <= 1e-12) {
        if (++degenerate > o_.bland_after) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
      pivot(enter, leave, w, ratio);
      ++iterations;
    }
  }

  void start_from_artificials() {
    basis_.resize(m_);
    in_basis_.assign(static_cast<std::size_t>(s_.A.cols()), 0);
    for (int i = 0; i < m_; ++i) {
      int b = s_.artificial_begin + i;
      // A slack with +1 in a nonnegative-rhs row can start in the basis.
      if (i >= s_.n_eq && s_.row_sign[static_cast<std::size_t>(i)] > 0) b = s_.slack_begin + (i - s_.n_eq);
      basis_[i] = b;
      in_basis_[b] = 1;
    }
    refactor();
  }

  // Move zero-level artificials out of the basis where a structural pivot exists.
  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < s_.artificial_begin) continue;
      const VecD row = Binv_.row(i);
      int best = -1;
      double bestv = 1e-7;
      for (int j = 0; j < s_.artificial_begin; ++j) {
        if (in_basis_[j]) continue;
        double v = 0.0;
        for (SpMat::InnerIterator it(s_.A, j); it; ++it) v += row(it.row()) * it.value();
        if (std::abs(v) > bestv) {
          bestv = std::abs(v);
          best = j;
        }
      }
      if (best < 0) continue;  // redundant row
      VecD a = VecD::Zero(m_);
      for (SpMat::InnerIterator it(s_.A, best); it; ++it) a(it.row()) = it.value();
      const VecD w = Binv_ * a;
      pivot(best, i, w, xb_(i) / w(i));
    }
  }

  void refactor() {
    MatD B = MatD::Zero(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (SpMat::InnerIterator it(s_.A, basis_[i]); it; ++it) B(it.row(), i) = it.value();
    Eigen::PartialPivLU<MatD> lu(B);
    Binv_ = lu.inverse();
    xb_ = Binv_ * s_.b;
    for (int i = 0; i < m_; ++i)
      if (xb_(i) < 0.0 && xb_(i) > -o_.feas_tol) xb_(i) = 0.0;
  }

  VecD primal() const {
    VecD z = VecD::Zero(s_.A.cols());
    for (int i = 0; i < m_; ++i) z(basis_[i]) = std::max(xb_(i), 0.0);
    return z;
  }

  const VecD& pi() const { return pi_; }
  void compute_pi(const VecD& cost) {
    VecD cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = cost(basis_[i]);
    pi_ = Binv_.transpose() * cb;
  }

private:
  void pivot(int enter, int leave, const VecD& w, double step) {
    xb_ -= step * w;
    xb_(leave) = step;
    const double wl = w(leave);
    const Eigen::RowVectorXd rl = Binv_.row(leave) / wl;
    for (int i = 0; i < m_; ++i) {
      if (i == leave) continue;
      if (w(i) != 0.0) Binv_.row(i) -= w(i) * rl;
    }
    Binv_.row(leave) = rl;
    in_basis_[basis_[leave]] = 0;
    basis_[leave] = enter;
    in_basis_[enter] = 1;
  }

  const Standard& s_;
  const LpOptions& o_;
  int m_;
  std::vector<int> basis_;
  std::vector<char> in_basis_;
  MatD Binv_;
  VecD xb_;
  VecD pi_;
};

}  // namespace

LpSolution solve_lp(const LpProblem& p, const LpOptions& opts) {
  const Eigen::Index n = p.num_vars();
  if (n < 1) throw std::invalid_argument("solve_lp: no variables");
  if (p.A_eq.rows() > 0 && (p.A_eq.cols() != n || p.b_eq.size() != p.A_eq.rows()))
    throw std::invalid_argument("solve_lp: equality block has mismatched dimensions");
  if (p.A_ub.rows() > 0 && (p.A_ub.cols() != n || p.b_ub.size() != p.A_ub.rows()))
    throw std::invalid_argument("solve_lp: inequality block has mismatched dimensions");
  if (p.A_eq.rows() == 0 && p.b_eq.size() != 0) throw std::invalid_argument("solve_lp: b_eq without A_eq");
  if (p.A_ub.rows() == 0 && p.b_ub.size() != 0) throw std::invalid_argument("solve_lp: b_ub without A_ub");
  if ((p.lower.size() != 0 && p.lower.size() != n) || (p.upper.size() != 0 && p.upper.size() != n))
    throw std::invalid_argument("solve_lp: bound vectors have the wrong length");
  if (!p.c.allFinite() || !p.b_eq.allFinite() || !p.b_ub.allFinite())
    throw std::invalid_argument("solve_lp: non-finite data");
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lo = p.lower.size() ? p.lower(j) : 0.0;
    const double hi = p.upper.size() ? p.upper(j) : kInfty;
    if (lo > hi) {
      LpSolution bad;
      bad.status = LpStatus::Infeasible;
      return bad;
    }
  }

  const Standard s = to_standard(p);
  const int m = static_cast<int>(s.A.rows());
  const int total = static_cast<int>(s.A.cols());
  LpSolution sol;

  if (m == 0) {
    // Only sign constraints: each variable sits at the bound its cost prefers.
    sol.x.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const VarMap& vm = s.vars[static_cast<std::size_t>(j)];
      const double cj = p.c(j);
      if ((vm.pos >= 0 && vm.neg >= 0 && cj != 0.0) || (vm.neg < 0 && cj < 0.0) || (vm.pos < 0 && cj > 0.0)) {
        sol.status = LpStatus::Unbounded;
        return sol;
      }
      sol.x(j) = vm.offset;
    }
    sol.status = LpStatus::Optimal;
    sol.objective = p.c.dot(sol.x);
    sol.reduced_cost = p.c;
    return sol;
  }

  Simplex sx(s, opts);
  sx.start_from_artificials();

  VecD c1 = VecD::Zero(total);
  c1.tail(m).setOnes();
  std::vector<char> allowed(static_cast<std::size_t>(total), 1);
  int iterations = 0;
  LpStatus st = sx.run(c1, allowed, iterations);
  if (st == LpStatus::MaxIter) {
    sol.status = st;
    sol.iterations = iterations;
    return sol;
  }
  sx.refactor();
  const double infeas = c1.dot(sx.primal());
  if (infeas > opts.feas_tol * std::max(1.0, s.b.lpNorm<Eigen::Infinity>()) * 10.0) {
    sol.status = LpStatus::Infeasible;
    sol.iterations = iterations;
    return sol;
  }

  sx.drive_out_artificials();
  for (int j = s.artificial_begin; j < total; ++j) allowed[static_cast<std::size_t>(j)] = 0;
  sx.refactor();
  st = sx.run(s.c, allowed, iterations);
  sol.iterations = iterations;
  if (st != LpStatus::Optimal) {
    sol.status = st;
    return sol;
  }
  sx.refactor();
  sx.compute_pi(s.c);

  const VecD z = sx.primal();
  sol.x.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const VarMap& vm = s.vars[static_cast<std::size_t>(j)];
    double x = vm.offset;
    if (vm.pos >= 0) x += z(vm.pos);
    if (vm.neg >= 0) x -= z(vm.neg);
    sol.x(j) = x;
  }
  sol.objective = p.c.dot(sol.x);

  const VecD& pi = sx.pi();
  VecD y(m);
  for (int i = 0; i < m; ++i) y(i) = s.row_sign[static_cast<std::size_t>(i)] * pi(i);
  sol.dual_eq = y.head(s.n_eq);
  sol.dual_ub = y.segment(s.n_eq, s.n_ub);

  VecD d = s.c - s.A.transpose() * pi;
  sol.reduced_cost.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const VarMap& vm = s.vars[static_cast<std::size_t>(j)];
    sol.reduced_cost(j) = vm.pos >= 0 ? d(vm.pos) : -d(vm.neg);
  }
  double comp = 0.0;
  for (int j = 0; j < s.artificial_begin; ++j) comp += std::abs(z(j) * d(j));
  sol.complementarity = comp;

  double viol = 0.0;
  if (s.n_eq > 0) viol = std::max(viol, (p.A_eq * sol.x - p.b_eq).lpNorm<Eigen::Infinity>());
  if (s.n_ub > 0) viol = std::max(viol, std::max(0.0, (p.A_ub * sol.x - p.b_ub).maxCoeff()));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (p.lower.size()) viol = std::max(viol, p.lower(j) - sol.x(j));
    else viol = std::max(viol, -sol.x(j));
    if (p.upper.size()) viol = std::max(viol, sol.x(j) - p.upper(j));
  }
  sol.max_violation = viol;
  sol.status = LpStatus::Optimal;
  return sol;
}

}  // namespace cma::solvers
