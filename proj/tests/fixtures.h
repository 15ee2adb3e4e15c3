#pragma once

// Scene fixtures shared by the unit and acceptance suites.

#include <memory>
#include <vector>

#include "dirslam/association.h"
#include "dirslam/gibbs.h"
#include "dirslam/neighbor_graph.h"
#include "dirslam/synthetic.h"
#include "dirslam/surfel_map.h"
#include "dirslam/vmf.h"

namespace testsup {

struct PlaneCloud {
  dirslam::SurfelMap map;
  dirslam::NeighborGraph graph;
  std::vector<int32_t> true_segment;  // by surfel id

  PlaneCloud(const dirslam::NeighborGraph::Config& cfg, double sigma_pl)
      : graph(cfg, sigma_pl) {}
};

// Three orthogonal 1 m x 1 m planar patches, `per_plane` surfels each, with
// normals drawn from vMF(plane normal, tau_true) and observation accumulators
// seeded from those draws. The neighbor graph comes from true adjacency
// (labels are still unassigned when it is built, so the potential distance
// reduces to the Euclidean tie-breaker).
inline std::unique_ptr<PlaneCloud> make_three_plane_cloud(int per_plane, double tau_true,
                                                          uint64_t seed,
                                                          double sigma_pl = 0.01) {
  using namespace dirslam;
  RandomSource rng(seed);
  auto fx_ptr = std::make_unique<PlaneCloud>(NeighborGraph::Config{12, 0.2}, sigma_pl);
  PlaneCloud& fx = *fx_ptr;

  const Eigen::Vector3d normals[3] = {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}};
  const Eigen::Vector3d origins[3] = {{0, 0, 0}, {0, 0.1, 1.1}, {1.1, 0, 1.1}};
  for (int p = 0; p < 3; ++p) {
    Eigen::Vector3d e1, e2;
    UnitVec3(normals[p]).tangent_basis(e1, e2);
    for (int i = 0; i < per_plane; ++i) {
      const double a = rng.uniform() - 0.5;
      const double b = rng.uniform() - 0.5;
      NewSurfel s;
      s.position_world = origins[p] + a * e1 + b * e2;
      s.normal_world = sample_vmf({UnitVec3(normals[p]), tau_true}, rng).vec();
      s.cov_world = 1e-4 * Eigen::Matrix3d::Identity();
      s.radius = 0.01;
      const SurfelId id = fx.map.add(s);
      fx.true_segment.push_back(p);
      (void)id;
    }
  }
  for (SurfelId id = 0; id < fx.map.slot_count(); ++id) fx.graph.add_surfel(fx.map, id);
  return fx_ptr;
}

// Runs `engine` sweeps and returns per-surfel labels in id order.
inline std::vector<int32_t> current_labels(const dirslam::SurfelMap& map) {
  std::vector<int32_t> out;
  for (dirslam::SurfelId id = 0; id < map.slot_count(); ++id) {
    if (map.alive(id)) out.push_back(map.surfel(id).label);
  }
  return out;
}

// Builds a map by seeding a surfel at every `stride`-th valid pixel of a
// rendered frame; labels come from the renderer's ground-truth segments, so
// the tracker can be exercised independently of the segmentation.
struct RenderedMap {
  dirslam::SurfelMap map;
  std::shared_ptr<const dirslam::MapSnapshot> snapshot;
};

// `cov_scale` shrinks the seed covariance to emulate converged estimates
// (1/N of a single observation after N consistent observations).
inline RenderedMap build_map_from_render(const dirslam::SyntheticScene& scene,
                                         const dirslam::Pose& pose,
                                         const dirslam::Intrinsics& K, int stride,
                                         bool noise, dirslam::RandomSource& rng,
                                         double cov_scale = 1.0) {
  using namespace dirslam;
  RenderedMap out;
  GroundTruth gt;
  DepthNoiseModel noise_model;
  const Frame frame =
      render_synthetic(scene, pose, K, 0.0, noise, noise_model, noise ? &rng : nullptr, &gt);
  for (int v = 2; v < K.height - 2; v += stride) {
    for (int u = 2; u < K.width - 2; u += stride) {
      auto seed = make_surfel_seed(frame, pose, {u, v}, noise_model);
      if (!seed) continue;
      seed->cov_world *= cov_scale;
      const SurfelId id = out.map.add(*seed);
      out.map.surfel(id).label = gt.segment[v * K.width + u];
    }
  }
  out.snapshot = out.map.publish(10);
  return out;
}

}  // namespace testsup
