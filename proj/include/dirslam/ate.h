#pragma once

#include <string>
#include <vector>

#include "dirslam/lie.h"

namespace dirslam {

struct TimedPose {
  double timestamp = 0.0;
  Pose pose;  // camera-to-world
};

using Trajectory = std::vector<TimedPose>;

struct TrajectoryReport {
  double rmse = 0.0;                  // translational RMSE after alignment, meters
  std::vector<double> errors;         // per matched frame
  Pose alignment;                     // rigid transform applied to the estimate
  size_t matched = 0;
};

// Absolute trajectory error: matches timestamps within `max_dt`, finds the
// least-squares rigid alignment (scale fixed to 1) between matched positions,
// and reports the residual translational RMSE. Throws when fewer than two
// timestamps match.
TrajectoryReport evaluate_ate(const Trajectory& estimate, const Trajectory& ground_truth,
                              double max_dt = 0.02);

// Least-squares rigid registration mapping `src` points onto `dst`.
Pose rigid_align(const std::vector<Eigen::Vector3d>& src,
                 const std::vector<Eigen::Vector3d>& dst);

}  // namespace dirslam
