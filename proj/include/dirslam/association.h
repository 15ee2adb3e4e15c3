#pragma once

#include <optional>
#include <vector>

#include "dirslam/frame.h"
#include "dirslam/lie.h"
#include "dirslam/noise_model.h"
#include "dirslam/rng.h"
#include "dirslam/surfel_map.h"

namespace dirslam {

// One projectively associated observation of a map surfel.
struct Observation {
  SurfelId id = 0;
  Eigen::Vector3d point_cam = Eigen::Vector3d::Zero();   // x^p
  Eigen::Vector3d normal_cam = Eigen::Vector3d::UnitZ();  // x^n
  double intensity = 0.0;
  Eigen::Matrix3d cov_cam = Eigen::Matrix3d::Identity();  // Sigma_O
  Eigen::Vector2i pixel = Eigen::Vector2i::Zero();
  float grad_mag = 0.f;
};

struct AssociationGates {
  double mahalanobis_max = 3.0;   // point gate under Sigma_p
  double normal_cone_deg = 45.0;  // agreement between n_bar and observed normal
};

struct AssociationResult {
  std::vector<Observation> observations;
  std::vector<SurfelId> prune;  // back-facing or occluded (low probability)
  size_t visible = 0;           // projected in front of the camera and in bounds
};

// Projects every snapshot surfel into the frame. Surfels facing away from the
// camera or failing the Mahalanobis point gate are routed to pruning;
// invalid-depth or normal-disagreement pixels just yield no observation.
// `pose_cov` is the tracker covariance folded into the point gate.
AssociationResult associate(const MapSnapshot& snapshot, const Frame& frame,
                            const Pose& cam_to_world, const DepthNoiseModel& noise,
                            const AssociationGates& gates,
                            const Matrix6d& pose_cov = Matrix6d::Zero());

// Pixels not covered by the projected map, sampled with probability
// proportional to (grad_floor * max||grad I|| + ||grad I||), up to `budget`
// seeds per frame.
std::vector<Eigen::Vector2i> extract_new_surfels(const Frame& frame,
                                                 const Pose& cam_to_world,
                                                 const MapSnapshot& snapshot, int budget,
                                                 double grad_floor, RandomSource& rng);

// Back-projects one seed pixel into a map surfel candidate; empty when the
// depth is invalid or the normal estimate fails. Radius is the pixel
// footprint sqrt(2) z / f, fixed at creation.
std::optional<NewSurfel> make_surfel_seed(const Frame& frame, const Pose& cam_to_world,
                                          const Eigen::Vector2i& pixel,
                                          const DepthNoiseModel& noise,
                                          const Matrix6d& pose_cov = Matrix6d::Zero());

}  // namespace dirslam
