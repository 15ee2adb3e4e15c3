#include "dirslam/surfel_map.h"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace dirslam {

double gaussian_entropy3(const Eigen::Matrix3d& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
  es.computeDirect(cov);
  double log_det = 0;
  for (int i = 0; i < 3; ++i) log_det += std::log(std::max(es.eigenvalues()[i], 1e-12));
  return 0.5 * (3.0 * std::log(2.0 * M_PI * M_E) + log_det);
}

SurfelId SurfelMap::add(const NewSurfel& s) {
  Surfel f;
  f.id = static_cast<SurfelId>(surfels_.size());
  f.position = s.position_world;
  f.normal = s.normal_world.normalized();
  f.intensity = s.intensity;
  f.rgb = s.rgb;
  f.radius = s.radius;
  f.grad_mag = s.grad_mag;
  f.initial_position = s.position_world;
  f.initial_cov = s.cov_world;
  f.initial_normal = f.normal;
  const Eigen::Matrix3d info = s.cov_world.ldlt().solve(Eigen::Matrix3d::Identity());
  f.obs_info = info;
  f.obs_info_point = info * s.position_world;
  f.obs_normal_sum = f.normal;
  f.obs_count = 1;
  surfels_.push_back(f);
  ++alive_count_;
  return f.id;
}

void SurfelMap::remove(std::span<const SurfelId> ids) {
  for (SurfelId id : ids) {
    if (id < surfels_.size() && surfels_[id].alive) {
      surfels_[id].alive = false;
      --alive_count_;
    }
  }
}

std::vector<SurfelId> SurfelMap::alive_ids() const {
  std::vector<SurfelId> out;
  out.reserve(alive_count_);
  for (const auto& s : surfels_)
    if (s.alive) out.push_back(s.id);
  return out;
}

void SurfelMap::apply_observation(SurfelId id, const Eigen::Vector3d& point_world,
                                  const Eigen::Vector3d& normal_world,
                                  const Eigen::Matrix3d& cov_world, double intensity,
                                  float grad_mag) {
  Surfel& s = surfels_[id];
  const Eigen::Matrix3d info = cov_world.ldlt().solve(Eigen::Matrix3d::Identity());
  s.obs_info += info;
  s.obs_info_point += info * point_world;
  s.obs_normal_sum += normal_world;
  ++s.obs_count;
  s.intensity += (intensity - s.intensity) / s.obs_count;
  s.grad_mag = grad_mag;
}

std::shared_ptr<const MapSnapshot> SurfelMap::publish(uint32_t min_samples) {
  auto snap = std::make_shared<MapSnapshot>();
  snap->version = ++version_;
  snap->surfels.reserve(alive_count_);
  for (const auto& s : surfels_) {
    if (!s.alive) continue;
    SurfelEstimate e;
    e.id = s.id;
    e.intensity = s.intensity;
    e.radius = s.radius;
    e.grad_mag = s.grad_mag;
    e.rgb = s.rgb;
    e.obs_count = s.obs_count;
    e.sample_count = s.sample_count;
    if (s.sample_count >= min_samples && min_samples > 0) {
      const double n = s.sample_count;
      e.position = s.pos_sample_sum / n;
      Eigen::Matrix3d cov = s.pos_sample_outer / n - e.position * e.position.transpose();
      // Clamp away the negative eigenvalues produced by cancellation.
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
      es.computeDirect(cov);
      const Eigen::Vector3d ev = es.eigenvalues().cwiseMax(1e-12);
      e.cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
      e.normal = s.normal_sample_sum.norm() > 1e-15 ? s.normal_sample_sum.normalized()
                                                    : s.normal;
      e.label = s.top_labels.empty() ? s.label : s.top_labels.argmax();
    } else {
      e.position = s.initial_position;
      e.cov = s.initial_cov;
      e.normal = s.initial_normal;
      e.label = s.label;
    }
    e.entropy = gaussian_entropy3(e.cov);
    snap->surfels.push_back(e);
  }
  snapshot_ = snap;
  return snap;
}

}  // namespace dirslam
