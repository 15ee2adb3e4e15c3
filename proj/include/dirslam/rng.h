#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace dirslam {

// Self-contained xoshiro256++ generator. All randomness in the system flows
// through explicitly passed RandomSource instances; there is no global RNG,
// so single-thread runs with a fixed seed are bit-reproducible.
class RandomSource {
 public:
  explicit RandomSource(uint64_t seed);

  uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();

  // Standard normal via Box-Muller (second draw cached).
  double normal();

  // Uniform integer in {0, ..., n-1}; n must be > 0.
  int uniform_int(int n);

  Eigen::Vector3d normal3();

  // Derives an independent substream; the parent state is not advanced.
  RandomSource fork(uint64_t stream) const;

 private:
  uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace dirslam
