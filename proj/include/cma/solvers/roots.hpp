#pragma once

#include <functional>

namespace cma::solvers {

// Brent's method on a bracketing interval. Stops when |f(x)| <= tol or the
// bracket is narrower than tol. Throws BracketError when f(lo), f(hi) share a sign.
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol,
                 int max_iter = 500);

}  // namespace cma::solvers
