#include "dirslam/association.h"

#include <Eigen/Cholesky>
#include <cmath>

#include "dirslam/normal_estimation.h"

namespace dirslam {

namespace {

// Covariance of T x from the pose tangent covariance: J = R [I | -hat(x)].
Eigen::Matrix3d pose_point_cov(const Eigen::Matrix3d& R, const Eigen::Vector3d& x_cam,
                               const Matrix6d& pose_cov) {
  if (pose_cov.isZero(0)) return Eigen::Matrix3d::Zero();
  Eigen::Matrix<double, 3, 6> J;
  J.leftCols<3>() = R;
  J.rightCols<3>() = -R * skew(x_cam);
  return J * pose_cov * J.transpose();
}

}  // namespace

AssociationResult associate(const MapSnapshot& snapshot, const Frame& frame,
                            const Pose& cam_to_world, const DepthNoiseModel& noise,
                            const AssociationGates& gates, const Matrix6d& pose_cov) {
  AssociationResult result;
  const Pose world_to_cam = cam_to_world.inverse();
  const Eigen::Matrix3d R = cam_to_world.rotation.matrix();
  const Eigen::Vector3d cam_center = cam_to_world.translation;
  const double cos_gate = std::cos(gates.normal_cone_deg * M_PI / 180.0);
  const double m2_gate = gates.mahalanobis_max * gates.mahalanobis_max;

  for (const auto& s : snapshot.surfels) {
    const Eigen::Vector3d y = world_to_cam.apply(s.position);
    if (y.z() <= 0.05) continue;
    const Eigen::Vector2d uv = frame.intrinsics.project(y);
    if (!frame.intrinsics.in_bounds(uv.x(), uv.y())) continue;
    ++result.visible;

    // Back-facing: the estimated normal points away from the camera.
    if (s.normal.dot(s.position - cam_center) >= 0) {
      result.prune.push_back(s.id);
      continue;
    }

    const int px = static_cast<int>(std::lround(uv.x()));
    const int py = static_cast<int>(std::lround(uv.y()));
    if (!frame.depth_valid(px, py)) continue;
    const double z = frame.depth.at(px, py);
    const Eigen::Vector3d x_cam = frame.intrinsics.backproject(px, py, z);
    const Eigen::Matrix3d cov_obs = noise.covariance(frame.intrinsics, px, py, z);

    // Point gate in the world frame under observation + estimate + pose
    // uncertainty; failures are low-probability observations (occlusion).
    const Eigen::Vector3d r = cam_to_world.apply(x_cam) - s.position;
    const Eigen::Matrix3d gate_cov = R * cov_obs * R.transpose() + s.cov +
                                     pose_point_cov(R, x_cam, pose_cov);
    const double m2 = r.dot(gate_cov.ldlt().solve(r));
    if (m2 > m2_gate) {
      result.prune.push_back(s.id);
      continue;
    }

    const auto n_est = estimate_normal(frame, px, py);
    if (!n_est) continue;
    const Eigen::Vector3d n_world = R * (*n_est);
    if (n_world.dot(s.normal) < cos_gate) continue;

    Observation obs;
    obs.id = s.id;
    obs.point_cam = x_cam;
    obs.normal_cam = *n_est;
    obs.intensity = frame.intensity.at(px, py);
    obs.cov_cam = cov_obs;
    obs.pixel = {px, py};
    obs.grad_mag = frame.grad_mag.at(px, py);
    result.observations.push_back(obs);
  }
  return result;
}

std::vector<Eigen::Vector2i> extract_new_surfels(const Frame& frame,
                                                 const Pose& cam_to_world,
                                                 const MapSnapshot& snapshot, int budget,
                                                 double grad_floor, RandomSource& rng) {
  const int w = frame.depth.width, h = frame.depth.height;
  std::vector<uint8_t> covered(static_cast<size_t>(w) * h, 0);

  // Splat each visible surfel's projected footprint.
  const Pose world_to_cam = cam_to_world.inverse();
  for (const auto& s : snapshot.surfels) {
    const Eigen::Vector3d y = world_to_cam.apply(s.position);
    if (y.z() <= 0.05) continue;
    const Eigen::Vector2d uv = frame.intrinsics.project(y);
    if (!frame.intrinsics.in_bounds(uv.x(), uv.y(), -2)) continue;
    const int r_px = std::max(
        1, static_cast<int>(std::ceil(s.radius * frame.intrinsics.fx / y.z())));
    const int cx = static_cast<int>(std::lround(uv.x()));
    const int cy = static_cast<int>(std::lround(uv.y()));
    for (int dy = -r_px; dy <= r_px; ++dy) {
      for (int dx = -r_px; dx <= r_px; ++dx) {
        const int x = cx + dx, yy = cy + dy;
        if (x < 0 || yy < 0 || x >= w || yy >= h) continue;
        if (dx * dx + dy * dy <= r_px * r_px) covered[yy * w + x] = 1;
      }
    }
  }

  float max_grad = 0.f;
  for (float g : frame.grad_mag.data) max_grad = std::max(max_grad, g);
  const double eps = grad_floor * std::max(1e-6f, max_grad);

  // Cumulative weights over uncovered valid-depth pixels.
  std::vector<double> cum(static_cast<size_t>(w) * h, 0.0);
  double total = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      if (!covered[i] && frame.depth.data[i] > 0.f) {
        total += eps + frame.grad_mag.data[i];
      }
      cum[i] = total;
    }
  }

  std::vector<Eigen::Vector2i> seeds;
  if (total <= 0) return seeds;
  std::vector<uint8_t> taken(static_cast<size_t>(w) * h, 0);
  const int attempts = budget * 4;
  for (int k = 0; k < attempts && static_cast<int>(seeds.size()) < budget; ++k) {
    const double r = rng.uniform() * total;
    const size_t i = std::lower_bound(cum.begin(), cum.end(), r) - cum.begin();
    if (i >= taken.size() || taken[i]) continue;
    taken[i] = 1;
    seeds.emplace_back(static_cast<int>(i % w), static_cast<int>(i / w));
  }
  return seeds;
}

std::optional<NewSurfel> make_surfel_seed(const Frame& frame, const Pose& cam_to_world,
                                          const Eigen::Vector2i& pixel,
                                          const DepthNoiseModel& noise,
                                          const Matrix6d& pose_cov) {
  const int u = pixel.x(), v = pixel.y();
  if (u < 0 || v < 0 || u >= frame.depth.width || v >= frame.depth.height) {
    return std::nullopt;
  }
  if (!frame.depth_valid(u, v)) return std::nullopt;
  const auto n_cam = estimate_normal(frame, u, v);
  if (!n_cam) return std::nullopt;

  const double z = frame.depth.at(u, v);
  const Eigen::Vector3d x_cam = frame.intrinsics.backproject(u, v, z);
  const Eigen::Matrix3d R = cam_to_world.rotation.matrix();

  NewSurfel s;
  s.position_world = cam_to_world.apply(x_cam);
  s.normal_world = R * (*n_cam);
  s.cov_world = R * noise.covariance(frame.intrinsics, u, v, z) * R.transpose() +
                pose_point_cov(R, x_cam, pose_cov);
  s.intensity = frame.intensity.at(u, v);
  if (!frame.rgb.empty()) s.rgb = frame.rgb[static_cast<size_t>(v) * frame.depth.width + u];
  s.radius = std::sqrt(2.0) * z / frame.intrinsics.fx;
  s.grad_mag = frame.grad_mag.at(u, v);
  return s;
}

}  // namespace dirslam
