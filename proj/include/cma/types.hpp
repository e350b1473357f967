#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cma {

template <class F>
using Complex = std::complex<F>;

template <class F>
using Vec = Eigen::Matrix<F, Eigen::Dynamic, 1>;
template <class F>
using CVec = Eigen::Matrix<std::complex<F>, Eigen::Dynamic, 1>;
template <class F>
using Mat = Eigen::Matrix<F, Eigen::Dynamic, Eigen::Dynamic>;
template <class F>
using CMat = Eigen::Matrix<std::complex<F>, Eigen::Dynamic, Eigen::Dynamic>;

using cd = std::complex<double>;
using VecD = Vec<double>;
using CVecD = CVec<double>;
using MatD = Mat<double>;
using CMatD = CMat<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Error taxonomy. Every library error derives from Error so the CLI can map
// it to an exit code; precondition violations stay std::invalid_argument.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateChannel : public Error {
public:
  using Error::Error;
};

class NumericalFailure : public Error {
public:
  using Error::Error;
};

class InfeasibleTarget : public Error {
public:
  using Error::Error;
};

class BracketError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Wraps an angle into [0, 2*pi).
template <class F>
F wrap_phase(F phase) {
  constexpr F two_pi = F(2) * std::numbers::pi_v<F>;
  F r = std::fmod(phase, two_pi);
  if (r < F(0)) r += two_pi;
  if (r >= two_pi) r -= two_pi;
  return r;
}

// Signed distance between two angles, in (-pi, pi].
template <class F>
F phase_distance(F a, F b) {
  constexpr F pi = std::numbers::pi_v<F>;
  F d = wrap_phase(a - b);
  return d > pi ? d - F(2) * pi : d;
}

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

}  // namespace cma
