#pragma once

#include <vector>

#include "dirslam/rng.h"
#include "dirslam/synthetic.h"

namespace dirslam {

struct PlaneSparsityPoint {
  int planes = 0;
  double mean_inlier_fraction = 0.0;
};

// For each requested plane count P: over `trials` trials, sample P cloud
// points whose (position, normal) define planes, and count a point as an
// inlier of a plane when its out-of-plane distance is below `threshold` and
// its normal agrees within `max_angle_deg`. Reports trial-mean inlier
// fractions.
std::vector<PlaneSparsityPoint> plane_sparsity_experiment(
    const std::vector<SurfacePoint>& cloud, const std::vector<int>& plane_counts,
    double threshold, double max_angle_deg, int trials, RandomSource& rng);

// Inlier fraction for an explicit set of planes (given as cloud indices);
// used for constructed plane sets, e.g. one representative per surface.
double inlier_fraction_for_planes(const std::vector<SurfacePoint>& cloud,
                                  const std::vector<int>& plane_indices, double threshold,
                                  double max_angle_deg);

}  // namespace dirslam
