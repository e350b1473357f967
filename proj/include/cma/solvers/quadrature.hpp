#pragma once

#include <functional>
#include <limits>

namespace cma::solvers {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  int max_intervals = 4000;
};

// Adaptive Gauss-Kronrod (7/15) with global interval refinement. An infinite
// upper limit is handled with x = a + (1 - t) / t. Throws NumericalFailure
// when the error estimate cannot be pushed below the tolerance.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts = {});

inline double quadrature(const std::function<double(double)>& f, double a, double b, double tol) {
  return integrate(f, a, b, QuadratureOptions{tol, 0.0, 4000}).value;
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace cma::solvers
