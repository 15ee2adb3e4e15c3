#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "dirslam/frame.h"
#include "dirslam/lie.h"
#include "dirslam/noise_model.h"
#include "dirslam/rng.h"

namespace dirslam {

// Finite textured rectangle: |a| <= extent_u along u_axis, |b| <= extent_v
// along v_axis = normal x u_axis, both measured from origin.
struct PlanePatch {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();
  double extent_u = 1.0;
  double extent_v = 1.0;
  int texture = 0;
  int segment = 0;

  Eigen::Vector3d v_axis() const { return normal.cross(u_axis); }
};

struct SurfacePoint {
  Eigen::Vector3d position;
  Eigen::Vector3d normal;
  int segment = 0;
};

// Per-pixel ground truth emitted alongside a rendered frame.
struct GroundTruth {
  int width = 0, height = 0;
  std::vector<int32_t> segment;           // -1 where no surface was hit
  std::vector<Eigen::Vector3f> normal_cam;  // camera frame, facing the camera
  ImageF true_depth;                      // noise-free
};

// Scene description: a set of planar patches. Boxes in the scene file expand
// to six patches (one segment per face direction).
struct SyntheticScene {
  std::vector<PlanePatch> patches;

  void add_plane(const Eigen::Vector3d& origin, const Eigen::Vector3d& normal,
                 double extent_u, double extent_v, int texture, int segment);
  void add_box(const Eigen::Vector3d& center, const Eigen::Vector3d& half_sizes,
               int texture, int segment_base);

  int segment_count() const;
  double total_area() const;

  // Area-weighted uniform surface samples with true normals and segments.
  std::vector<SurfacePoint> sample_surface(int n, RandomSource& rng) const;

  // Plain-text scene file: `plane ox oy oz nx ny nz eu ev texture segment`
  // and `box cx cy cz hx hy hz texture segment_base` lines.
  static SyntheticScene load(const std::string& path);
  void save(const std::string& path) const;
};

// Procedural texture intensity in [0, 1] at plane-local coordinates (meters).
double texture_intensity(int texture, double a, double b);

// Ray-casts the scene from a camera-to-world pose. With noise enabled, depth
// gets zero-mean Gaussian perturbations with the model's axial std.
Frame render_synthetic(const SyntheticScene& scene, const Pose& cam_to_world,
                       const Intrinsics& K, double timestamp, bool noise,
                       const DepthNoiseModel& noise_model, RandomSource* rng,
                       GroundTruth* gt = nullptr);

// Camera-to-world pose with +z looking from eye toward target and +y chosen
// so the image "down" direction aligns with -up.
Pose pose_look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                  const Eigen::Vector3d& up);

// Canned scenes used by tests and the demo pipeline.
SyntheticScene make_wall_scene(double z, int texture = 1);
SyntheticScene make_corner_scene(double size, int tex_a = 1, int tex_b = 2, int tex_c = 1);
SyntheticScene make_room_scene();  // 10 distinct plane directions

// Three patches with mutually orthogonal normals, all facing a camera at the
// origin looking along +z, occupying disjoint image regions (no crease or
// occlusion seams between surfaces).
SyntheticScene make_tripatch_scene(int tex_a = 1, int tex_b = 2, int tex_c = 2,
                                   double extent = 0.45);

}  // namespace dirslam
