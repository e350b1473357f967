#include "cma/rng.hpp"

#include <cmath>

namespace cma {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGamma) ^ (stream * 0xD1B54A32D192ED03ULL + 1))) {}

RandomStream RandomStream::substream(std::uint64_t index) const {
  RandomStream child(0);
  child.key_ = mix64(key_ ^ mix64(index + 0x632BE59BD9B4E019ULL));
  return child;
}

RandomStream::result_type RandomStream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double RandomStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

std::uint64_t RandomStream::below(std::uint64_t n) {
  // Lemire's multiply-shift with rejection for exact uniformity.
  unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>((*this)()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

cd RandomStream::complex_normal(double variance) {
  // Box-Muller: |z|^2 is exponential with mean `variance`, arg(z) uniform.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-variance * std::log(u1));
  const double t = kTwoPi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

double RandomStream::normal() { return complex_normal(2.0).real(); }

CVecD RandomStream::complex_normal_vector(Eigen::Index n, double variance) {
  CVecD v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_normal(variance);
  return v;
}

}  // namespace cma
