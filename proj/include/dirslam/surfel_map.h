#pragma once

#include <deque>
#include <memory>
#include <span>
#include <vector>

#include "dirslam/surfel.h"

namespace dirslam {

// Published per-surfel estimate consumed by the tracker and the exporters.
struct SurfelEstimate {
  SurfelId id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // p_bar
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();       // Sigma_bar, PSD
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();   // n_bar, unit
  int32_t label = kUnlabeled;                          // z_bar
  double intensity = 0.0;
  double radius = 0.0;
  float grad_mag = 0.f;
  double entropy = 0.0;  // 1/2 log((2 pi e)^3 |Sigma_bar|)
  std::array<uint8_t, 3> rgb{0, 0, 0};
  uint32_t obs_count = 0;
  uint32_t sample_count = 0;
};

// Immutable published view of the map; trackers keep a shared_ptr and never
// see later mutations.
struct MapSnapshot {
  uint64_t version = 0;
  std::vector<SurfelEstimate> surfels;  // ordered by id
};

struct NewSurfel {
  Eigen::Vector3d position_world = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal_world = Eigen::Vector3d::UnitZ();
  Eigen::Matrix3d cov_world = Eigen::Matrix3d::Identity();
  double intensity = 0.0;
  std::array<uint8_t, 3> rgb{0, 0, 0};
  double radius = 0.0;
  float grad_mag = 0.f;
};

class SurfelMap {
 public:
  // Creation counts as the first observation, so |O_i| >= 1 always holds.
  SurfelId add(const NewSurfel& s);

  void remove(std::span<const SurfelId> ids);

  Surfel& surfel(SurfelId id) { return surfels_[id]; }
  const Surfel& surfel(SurfelId id) const { return surfels_[id]; }
  bool alive(SurfelId id) const { return id < surfels_.size() && surfels_[id].alive; }

  size_t slot_count() const { return surfels_.size(); }
  size_t alive_count() const { return alive_count_; }
  std::vector<SurfelId> alive_ids() const;

  // Folds one associated observation into the accumulators.
  void apply_observation(SurfelId id, const Eigen::Vector3d& point_world,
                         const Eigen::Vector3d& normal_world,
                         const Eigen::Matrix3d& cov_world, double intensity,
                         float grad_mag);

  // Publishes sample-based estimates for surfels with at least `min_samples`
  // post-burn-in samples; younger surfels carry their initial observation
  // value and covariance (delayed-addition behavior).
  std::shared_ptr<const MapSnapshot> publish(uint32_t min_samples);

  std::shared_ptr<const MapSnapshot> snapshot() const { return snapshot_; }

 private:
  std::deque<Surfel> surfels_;
  size_t alive_count_ = 0;
  uint64_t version_ = 0;
  std::shared_ptr<const MapSnapshot> snapshot_ = std::make_shared<MapSnapshot>();
};

// Gaussian differential entropy 1/2 log((2 pi e)^3 |cov|) with eigenvalues
// clamped at 1e-12 so numerically singular covariances hit a finite floor.
double gaussian_entropy3(const Eigen::Matrix3d& cov);

}  // namespace dirslam
