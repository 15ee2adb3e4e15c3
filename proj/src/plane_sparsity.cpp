#include "dirslam/plane_sparsity.h"

#include <cmath>
#include <stdexcept>

namespace dirslam {

double inlier_fraction_for_planes(const std::vector<SurfacePoint>& cloud,
                                  const std::vector<int>& plane_indices, double threshold,
                                  double max_angle_deg) {
  const double cos_gate = std::cos(max_angle_deg * M_PI / 180.0);
  int inliers = 0;
  for (const auto& pt : cloud) {
    for (int pick : plane_indices) {
      const auto& pl = cloud[pick];
      if (std::abs(pl.normal.dot(pt.position - pl.position)) < threshold &&
          pl.normal.dot(pt.normal) > cos_gate) {
        ++inliers;
        break;
      }
    }
  }
  return static_cast<double>(inliers) / static_cast<double>(cloud.size());
}

std::vector<PlaneSparsityPoint> plane_sparsity_experiment(
    const std::vector<SurfacePoint>& cloud, const std::vector<int>& plane_counts,
    double threshold, double max_angle_deg, int trials, RandomSource& rng) {
  if (cloud.empty()) throw std::invalid_argument("plane_sparsity: empty cloud");
  for (int p : plane_counts) {
    if (p < 1) throw std::invalid_argument("plane_sparsity: plane count must be >= 1");
  }
  const int n = static_cast<int>(cloud.size());

  std::vector<PlaneSparsityPoint> curve;
  for (int planes : plane_counts) {
    double fraction_sum = 0;
    for (int t = 0; t < trials; ++t) {
      std::vector<int> picks(planes);
      for (int& p : picks) p = rng.uniform_int(n);
      fraction_sum += inlier_fraction_for_planes(cloud, picks, threshold, max_angle_deg);
    }
    curve.push_back({planes, fraction_sum / trials});
  }
  return curve;
}

}  // namespace dirslam
