#pragma once

#include <cstdint>
#include <limits>

#include "cma/types.hpp"

namespace cma {

// Counter-based random stream. Output n is a SplitMix64 finalizer applied to
// key + n * gamma, so a stream is fully described by (key, counter) and
// substreams are derived by hashing the parent key with an index. Per-trial
// substreams make Monte Carlo results independent of scheduling.
class RandomStream {
public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  // Independent child stream; the parent's counter is not consulted.
  [[nodiscard]] RandomStream substream(std::uint64_t index) const;

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  // Standard real normal.
  double normal();
  // Circular complex Gaussian CN(0, variance).
  cd complex_normal(double variance = 1.0);

  CVecD complex_normal_vector(Eigen::Index n, double variance = 1.0);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cma
