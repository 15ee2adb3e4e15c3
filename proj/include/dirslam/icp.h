#pragma once

#include <optional>

#include "dirslam/association.h"
#include "dirslam/frame.h"
#include "dirslam/noise_model.h"
#include "dirslam/surfel_map.h"

namespace dirslam {

struct TrackingConfig {
  double h_max = -10.0;            // entropy-bound stopping threshold, nats
  double lambda_min_thresh = 1.75e5;  // smallest-eigenvalue stopping threshold
  double lambda_photo = 0.1;       // photometric cost weight
  double sigma_intensity = 0.05;   // photometric residual scale
  double sigma_pl = 0.01;          // planarity floor in the p2pl variance
  int max_iterations = 10;
  double convergence_eps = 1e-6;
  int max_step_halvings = 5;
  int pyramid_levels = 2;  // coarse-to-fine, level (pyramid_levels-1) .. 0
  AssociationGates gates;
  bool random_selection = false;  // ablation: ignore direction-aware queues
  int max_selected = 0;           // hard selection budget per iteration; 0 = none
  int lambda_check_stride = 4;    // exact smallest-eigenvalue check cadence
};

struct TrackingDiagnostics {
  int iterations = 0;
  int selected = 0;  // surfels in the final normal equations
  size_t visible = 0;
  double entropy = std::numeric_limits<double>::infinity();
  double lambda_min = 0.0;
  double cost = 0.0;
  double ms = 0.0;
  bool lost = false;
};

struct TrackResult {
  Pose pose;  // covariance = (J^T J)^{-1} of the final iteration
  TrackingDiagnostics diag;
};

// Entropy lower bound of the pose estimate: 3 log(2 pi e) - 1/2 log |J^T J|;
// +infinity when the information matrix is singular (maximally uncertain).
double entropy_bound(const Matrix6d& JTJ);

// Frozen photometric whitening sqrt(lambda_photo / var) for one surfel at the
// linearization pose, where var = sigma_I^2 plus the surfel position
// covariance seen through the image gradient. Zero when the surfel does not
// project into the image (or the photometric term is disabled).
double photometric_weight(const SurfelEstimate& surfel, const Frame& frame,
                          const Pose& pose, const TrackingConfig& cfg);

// Whitened residual rows of one surfel/observation pair at the given pose.
// Row 0 is the point-to-plane error n^T (T x^p - p) / sigma_p2pl with
// sigma^2_p2pl = n^T (Sigma_O,world + Sigma_bar) n + sigma_pl^2; row 1 (when
// the surfel projects inside the image and `photo_weight` > 0) is the
// photometric error (I(pi(T^{-1} p)) - I_i) * photo_weight. Both whitenings
// are inputs fixed at the linearization point, so the rows are exactly the
// Gauss-Newton residual/Jacobian pair of a fixed objective. Jacobians are
// with respect to a right perturbation T exp(w), tangent ordered
// [translation; rotation].
struct IcpRows {
  int count = 0;
  double e[2] = {0, 0};
  Eigen::Matrix<double, 1, 6> J[2];
};
IcpRows icp_residual_jacobian(const SurfelEstimate& surfel, const Eigen::Vector3d& x_cam,
                              const Eigen::Matrix3d& cov_obs_world, const Frame& frame,
                              const Pose& pose, const TrackingConfig& cfg,
                              double photo_weight);

// Direction-aware incremental ICP: Gauss-Newton with step halving over a
// two-level pyramid; each outer iteration re-associates and refills the
// normal equations by picking candidates round-robin across directional
// segments in decreasing-gradient order, until the entropy bound and the
// smallest Fisher-information eigenvalue pass their thresholds or the queues
// run out. Singular information after exhausting all queues returns the
// initial pose flagged LOST. `rng` is only used by the random-selection
// ablation.
TrackResult incremental_icp(const Frame& frame, const MapSnapshot& snapshot,
                            const Pose& init_pose, const TrackingConfig& cfg,
                            const DepthNoiseModel& noise, RandomSource* rng = nullptr);

}  // namespace dirslam
