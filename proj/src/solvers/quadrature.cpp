#include "cma/solvers/quadrature.hpp"

#include <array>
#include <cmath>
#include <queue>
#include <vector>

#include "cma/types.hpp"

namespace cma::solvers {
namespace {

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment kronrod15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double value = resk * half;
  const double err = std::abs((resk - resg) * half);
  return {a, b, value, err};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts) {
  if (!(opts.abs_tol > 0.0) && !(opts.rel_tol > 0.0))
    throw std::invalid_argument("integrate: tolerance must be positive");
  if (std::isnan(a) || std::isnan(b)) throw std::invalid_argument("integrate: NaN limit");
  if (a == b) return {};
  if (std::isinf(a)) throw std::invalid_argument("integrate: lower limit must be finite");
  if (b < a) {
    auto r = integrate(f, b, a, opts);
    r.value = -r.value;
    return r;
  }

  std::function<double(double)> g = f;
  double lo = a;
  double hi = b;
  if (std::isinf(b)) {
    g = [&f, a](double t) {
      if (t <= 0.0) return 0.0;
      const double x = a + (1.0 - t) / t;
      const double v = f(x);
      return std::isfinite(v) ? v / (t * t) : 0.0;
    };
    lo = 0.0;
    hi = 1.0;
  }

  std::priority_queue<Segment> heap;
  Segment first = kronrod15(g, lo, hi);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  int count = 1;
  auto converged = [&] {
    const double target = std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
    return total_err <= target;
  };
  while (!converged()) {
    if (count >= opts.max_intervals)
      throw NumericalFailure("integrate: no convergence after " + std::to_string(count) +
                             " intervals (error estimate " + std::to_string(total_err) + ")");
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval at machine resolution; accept its contribution as is.
      total_err -= worst.error;
      worst.error = 0.0;
      heap.push(worst);
      if (heap.top().error == 0.0) break;
      continue;
    }
    const Segment left = kronrod15(g, worst.a, mid);
    const Segment right = kronrod15(g, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Re-sum to shed accumulated cancellation from the incremental updates.
  double value = 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {value, err, count};
}

}  // namespace cma::solvers
