#include "dirslam/normal_estimation.h"

#include <Eigen/Eigenvalues>

namespace dirslam {

std::optional<Eigen::Vector3d> estimate_normal(const Frame& frame, int u, int v,
                                               int window) {
  const auto& depth = frame.depth;
  if (u < 0 || v < 0 || u >= depth.width || v >= depth.height) return std::nullopt;
  if (!frame.depth_valid(u, v)) return std::nullopt;
  const double zc = depth.at(u, v);
  // Window points far in depth from the center belong to another surface and
  // would drag the plane fit across the discontinuity.
  const double depth_gate = std::max(0.03, 0.05 * zc);

  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();
  int count = 0;
  for (int dy = -window; dy <= window; ++dy) {
    for (int dx = -window; dx <= window; ++dx) {
      const int x = u + dx, y = v + dy;
      if (x < 0 || y < 0 || x >= depth.width || y >= depth.height) continue;
      const float z = depth.at(x, y);
      if (z <= 0.f || std::abs(z - zc) > depth_gate) continue;
      const Eigen::Vector3d p = frame.intrinsics.backproject(x, y, z);
      sum += p;
      outer += p * p.transpose();
      ++count;
    }
  }
  if (count < 6) return std::nullopt;

  const Eigen::Vector3d mean = sum / count;
  const Eigen::Matrix3d scatter = outer / count - mean * mean.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
  es.computeDirect(scatter);
  const Eigen::Vector3d evals = es.eigenvalues();
  // Rank check: in-plane spread must dominate; collinear or degenerate
  // windows are rejected.
  if (evals[1] < 1e-10 * std::max(evals[2], 1e-300) || evals[2] <= 0) return std::nullopt;

  Eigen::Vector3d n = es.eigenvectors().col(0);
  const Eigen::Vector3d pc = frame.intrinsics.backproject(u, v, zc);
  if (n.dot(pc) > 0) n = -n;
  return n;
}

}  // namespace dirslam
