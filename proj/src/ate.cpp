#include "dirslam/ate.h"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace dirslam {

Pose rigid_align(const std::vector<Eigen::Vector3d>& src,
                 const std::vector<Eigen::Vector3d>& dst) {
  if (src.size() != dst.size() || src.size() < 2) {
    throw std::invalid_argument("rigid_align needs >= 2 paired points");
  }
  Eigen::Vector3d ms = Eigen::Vector3d::Zero(), md = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    ms += src[i];
    md += dst[i];
  }
  ms /= src.size();
  md /= dst.size();
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    H += (src[i] - ms) * (dst[i] - md).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixV() * svd.matrixU().transpose();
  if (R.determinant() < 0) {
    Eigen::Matrix3d V = svd.matrixV();
    V.col(2) *= -1.0;
    R = V * svd.matrixU().transpose();
  }
  Pose out;
  out.rotation = Rotation3(R);
  out.translation = md - R * ms;
  return out;
}

TrajectoryReport evaluate_ate(const Trajectory& estimate, const Trajectory& ground_truth,
                              double max_dt) {
  std::vector<Eigen::Vector3d> est_pts, gt_pts;
  size_t j = 0;
  for (const auto& e : estimate) {
    // Ground truth is time-sorted; advance to the nearest timestamp.
    while (j + 1 < ground_truth.size() &&
           std::abs(ground_truth[j + 1].timestamp - e.timestamp) <=
               std::abs(ground_truth[j].timestamp - e.timestamp)) {
      ++j;
    }
    if (ground_truth.empty() ||
        std::abs(ground_truth[j].timestamp - e.timestamp) > max_dt) {
      continue;
    }
    est_pts.push_back(e.pose.translation);
    gt_pts.push_back(ground_truth[j].pose.translation);
  }
  if (est_pts.size() < 2) {
    throw std::runtime_error("evaluate_ate: no timestamp overlap between trajectories");
  }

  TrajectoryReport report;
  report.matched = est_pts.size();
  report.alignment = rigid_align(est_pts, gt_pts);
  double sq_sum = 0;
  report.errors.reserve(est_pts.size());
  for (size_t i = 0; i < est_pts.size(); ++i) {
    const double err = (report.alignment.apply(est_pts[i]) - gt_pts[i]).norm();
    report.errors.push_back(err);
    sq_sum += err * err;
  }
  report.rmse = std::sqrt(sq_sum / est_pts.size());
  return report;
}

}  // namespace dirslam
