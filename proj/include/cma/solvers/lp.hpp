#pragma once

#include <string>

#include <Eigen/Sparse>

#include "cma/types.hpp"

namespace cma::solvers {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor>;

// min c^T x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lower <= x <= upper.
// Empty bound vectors mean lower = 0 and upper = +inf.
struct LpProblem {
  VecD c;
  SpMat A_eq;
  VecD b_eq;
  SpMat A_ub;
  VecD b_ub;
  VecD lower;
  VecD upper;

  Eigen::Index num_vars() const { return c.size(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, MaxIter };

std::string to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::MaxIter;
  VecD x;
  double objective = 0.0;
  // Multipliers y with c - A^T y >= 0 on the reduced costs; dual_ub <= 0.
  VecD dual_eq;
  VecD dual_ub;
  VecD reduced_cost;
  // Sum of |x_j d_j| and |slack_i y_i| over the standard form.
  double complementarity = 0.0;
  double max_violation = 0.0;
  int iterations = 0;

  bool optimal() const { return status == LpStatus::Optimal; }
};

struct LpOptions {
  int max_iter = 200000;
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-9;
  // Switch from Dantzig pricing to Bland's rule after this many degenerate pivots.
  int bland_after = 50;
  int refactor_every = 64;
};

// Two-phase revised simplex with a dense basis inverse and sparse columns.
LpSolution solve_lp(const LpProblem& prob, const LpOptions& opts = {});

}  // namespace cma::solvers
