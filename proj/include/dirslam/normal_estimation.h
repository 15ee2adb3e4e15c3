#pragma once

#include <optional>

#include <Eigen/Core>

#include "dirslam/frame.h"

namespace dirslam {

// Surface normal at a depth pixel from the scatter matrix of the
// back-projected (2w+1)^2 window about its centroid: the normal is the
// eigenvector of the smallest eigenvalue, sign-flipped to face the camera
// (n . p < 0 in the camera frame). Needs at least 6 valid depth pixels and a
// well-conditioned scatter; otherwise returns nullopt.
std::optional<Eigen::Vector3d> estimate_normal(const Frame& frame, int u, int v,
                                               int window = 2);

}  // namespace dirslam
