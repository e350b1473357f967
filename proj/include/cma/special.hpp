#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cma/types.hpp"

namespace cma::special {

namespace detail {

template <class F>
F gamma_p_series(F a, F x) {
  F ap = a;
  F sum = F(1) / a;
  F del = sum;
  for (int n = 0; n < 100000; ++n) {
    ap += F(1);
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * std::numeric_limits<F>::epsilon() * F(0.25)) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x).
template <class F>
F gamma_q_fraction(F a, F x) {
  constexpr F tiny = std::numeric_limits<F>::min() / std::numeric_limits<F>::epsilon();
  F b = x + F(1) - a;
  F c = F(1) / tiny;
  F d = F(1) / b;
  F h = d;
  for (int i = 1; i < 100000; ++i) {
    const F an = -F(i) * (F(i) - a);
    b += F(2);
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = F(1) / d;
    const F del = d * c;
    h *= del;
    if (std::abs(del - F(1)) < std::numeric_limits<F>::epsilon() * F(0.25)) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x); series below x = a + 1,
// continued fraction above.
template <class F>
F gamma_p(F a, F x) {
  if (!(a > F(0))) throw std::invalid_argument("gamma_p: shape must be positive");
  if (x < F(0)) throw std::invalid_argument("gamma_p: x must be nonnegative");
  if (x == F(0)) return F(0);
  if (std::isinf(x)) return F(1);
  if (x < a + F(1)) return detail::gamma_p_series(a, x);
  return F(1) - detail::gamma_q_fraction(a, x);
}

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), accurate in the tail.
template <class F>
F gamma_q(F a, F x) {
  if (!(a > F(0))) throw std::invalid_argument("gamma_q: shape must be positive");
  if (x < F(0)) throw std::invalid_argument("gamma_q: x must be nonnegative");
  if (x == F(0)) return F(1);
  if (std::isinf(x)) return F(0);
  if (x < a + F(1)) return F(1) - detail::gamma_p_series(a, x);
  return detail::gamma_q_fraction(a, x);
}

template <class F>
F chi2_pdf(F x, int dof) {
  if (x < F(0)) return F(0);
  const F k = F(dof) / F(2);
  if (x == F(0)) return dof == 2 ? F(0.5) : (dof < 2 ? std::numeric_limits<F>::infinity() : F(0));
  return std::exp((k - F(1)) * std::log(x) - x / F(2) - k * std::log(F(2)) - std::lgamma(k));
}

template <class F>
F chi2_cdf(F x, int dof) {
  if (dof < 1) throw std::invalid_argument("chi2_cdf: dof must be >= 1");
  if (x < F(0)) throw std::invalid_argument("chi2_cdf: x must be nonnegative");
  return gamma_p(F(dof) / F(2), x / F(2));
}

template <class F>
F chi2_sf(F x, int dof) {
  if (dof < 1) throw std::invalid_argument("chi2_sf: dof must be >= 1");
  if (x < F(0)) throw std::invalid_argument("chi2_sf: x must be nonnegative");
  return gamma_q(F(dof) / F(2), x / F(2));
}

// Acklam's rational approximation refined by one Halley step.
template <class F>
F normal_quantile(F p) {
  if (!(p > F(0) && p < F(1))) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  const double q_lo = 0.02425;
  const double pd = static_cast<double>(p);
  double x;
  if (pd < q_lo) {
    const double q = std::sqrt(-2 * std::log(pd));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (pd <= 1 - q_lo) {
    const double q = pd - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - pd));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - pd;
  const double u = e * std::sqrt(2 * kPi) * std::exp(x * x / 2);
  x = x - u / (1 + x * u / 2);
  return F(x);
}

// Chi-square quantile: Wilson-Hilferty start, Newton steps safeguarded by a
// bisection bracket. Converges until the CDF residual is at rounding level.
template <class F>
F chi2_inv(F p, int dof) {
  if (dof < 1) throw std::invalid_argument("chi2_inv: dof must be >= 1");
  if (!(p > F(0) && p < F(1))) throw std::invalid_argument("chi2_inv: p must lie in (0, 1)");
  if (dof == 2) return -F(2) * std::log1p(-p);

  const F k = F(dof);
  const F z = normal_quantile(p);
  const F h = F(2) / (F(9) * k);
  F x = k * std::pow(std::max(F(1) - h + z * std::sqrt(h), F(1e-3)), F(3));

  F lo = F(0);
  F hi = std::max(x, F(1));
  while (chi2_cdf(hi, dof) < p) {
    lo = hi;
    hi *= F(2);
  }
  if (!(x > lo && x < hi)) x = F(0.5) * (lo + hi);

  for (int it = 0; it < 400; ++it) {
    const F cdf = chi2_cdf(x, dof);
    const F resid = cdf - p;
    if (resid == F(0)) return x;
    if (resid > F(0))
      hi = x;
    else
      lo = x;
    const F pdf = chi2_pdf(x, dof);
    F next = (pdf > F(0)) ? x - resid / pdf : F(0.5) * (lo + hi);
    if (!(next > lo && next < hi)) next = F(0.5) * (lo + hi);
    if (std::abs(next - x) <= std::numeric_limits<F>::epsilon() * F(4) * std::max(x, F(1e-300)) ||
        hi - lo <= std::numeric_limits<F>::epsilon() * F(4) * hi) {
      return next;
    }
    x = next;
  }
  return x;
}

// Kolmogorov limiting survival function Q_KS(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

// Asymptotic p-value of a one-sample KS statistic D on n points (Stephens' correction).
double ks_pvalue(double d, std::size_t n);

}  // namespace cma::special
