#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Core>

namespace dirslam {

// Every model constant in one place. The file form is flat `section.key
// value` lines; dump() emits all keys with full precision, so a config
// round-trips losslessly through its file form.
struct RunConfig {
  // Input: either a TUM RGB-D directory or a synthetic scene + trajectory.
  std::string input_tum;
  std::string input_scene;
  std::string input_trajectory;
  int input_frames = 0;  // 0 = all available
  bool input_noise = true;

  // Camera intrinsics (synthetic rendering; TUM uses these too).
  int camera_width = 640;
  int camera_height = 480;
  double camera_fx = 525.0;
  double camera_fy = 525.0;
  double camera_cx = 319.5;
  double camera_cy = 239.5;

  // Map / MRF.
  double map_sigma_pl = 0.01;
  int map_knn_k = 12;
  double map_knn_radius = 0.2;
  double map_tau_obs = 100.0;
  int map_revisit_per_frame = 200;

  // Directional segmentation.
  double seg_alpha = 2.0;
  double seg_a = 1.0;
  double seg_b = 0.3;
  Eigen::Vector3d seg_mu0 = Eigen::Vector3d(0, 0, 1);
  double seg_lambda = 1.0;

  // Gibbs engine.
  int gibbs_burn_in = 5;
  int gibbs_min_samples = 10;
  int gibbs_sweeps_per_frame = 1;
  bool bingham_literal_e2e2 = false;

  // Tracking.
  double track_h_max = -10.0;
  double track_lambda_min = 1.75e5;
  double track_lambda_photo = 0.1;
  double track_sigma_intensity = 0.05;
  int track_pyramid_levels = 2;
  std::string track_selection = "roundrobin";  // roundrobin | random
  int track_max_selected = 0;
  double track_mahalanobis = 3.0;
  double track_normal_cone_deg = 45.0;

  // Frontend extraction.
  int frontend_budget = 300;
  double frontend_grad_floor = 0.05;

  // Run control.
  uint64_t run_seed = 0;
  std::string run_mode = "single";  // single | parallel

  static RunConfig load(const std::string& path);
  static RunConfig parse(std::istream& in);
  void dump(std::ostream& out) const;
  void save(const std::string& path) const;
};

}  // namespace dirslam
