#include "dirslam/rng.h"

#include <cmath>

namespace dirslam {

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RandomSource::RandomSource(uint64_t seed) {
  uint64_t s = seed;
  for (auto& w : state_) w = splitmix64(s);
}

uint64_t RandomSource::next_u64() {
  const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RandomSource::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

int RandomSource::uniform_int(int n) {
  return static_cast<int>(uniform() * n) % n;
}

Eigen::Vector3d RandomSource::normal3() {
  return {normal(), normal(), normal()};
}

RandomSource RandomSource::fork(uint64_t stream) const {
  uint64_t s = state_[0] ^ rotl(state_[2], 31) ^ (stream * 0x9e3779b97f4a7c15ULL);
  return RandomSource(splitmix64(s));
}

}  // namespace dirslam
