#pragma once

#include "dirslam/directional_model.h"
#include "dirslam/gaussian.h"
#include "dirslam/neighbor_graph.h"
#include "dirslam/surfel_map.h"

namespace dirslam {

struct GibbsParams {
  double sigma_pl = 0.01;      // out-of-plane scale of the MRF potential, meters
  double tau_obs = 100.0;      // normal observation concentration tau_O
  uint32_t burn_in = 5;        // first kept sample is a surfel's burn_in-th sweep
  uint32_t min_samples = 10;   // samples required before estimates are published
  bool bingham_literal = false;  // use 2 e2^2/(e2+e3) instead of 2 e2 e3/(e2+e3)
};

struct SweepReport {
  uint64_t index = 0;
  double wall_ms = 0;
  int clusters = 0;
  double label_change_rate = 0;
  double mean_samples_per_surfel = 0;
  size_t surfels = 0;
};

// Gibbs sampler over surfel normals, labels, cluster parameters and surfel
// locations. Sweep order is fixed: normals, then labels (which consume the
// fresh normals), then cluster parameters, then locations.
class GibbsEngine {
 public:
  GibbsEngine(const GibbsParams& params, const SegmentationParams& seg_params)
      : params_(params), model_(seg_params) {}

  DirectionalModel& model() { return model_; }
  const DirectionalModel& model() const { return model_; }
  const GibbsParams& params() const { return params_; }

  // Posterior over n_i: vMF with resultant
  //   theta = tau_O * sum_j R_t x_j^n + tau_z mu_z + kappa_B q1,
  // where (q1, kappa_B) approximate the Bingham from the same-label neighbor
  // displacement scatter. Zero resultant means a uniform (degenerate) draw.
  VonMisesFisher normal_conditional(const SurfelMap& map, const NeighborGraph& graph,
                                    SurfelId id) const;

  // Posterior over p_i in information form: observation precision sums plus
  // the degenerate planarity precisions (n_i n_i^T + n_j n_j^T) / sigma_pl^2
  // of same-label neighbors.
  GaussianInfo3 location_conditional(const SurfelMap& map, const NeighborGraph& graph,
                                     SurfelId id) const;

  void sample_normal(SurfelMap& map, const NeighborGraph& graph, SurfelId id,
                     RandomSource& rng);
  void sample_location(SurfelMap& map, const NeighborGraph& graph, SurfelId id,
                       RandomSource& rng);
  // Returns true when the label changed. Keeps model counts consistent.
  bool sample_label(SurfelMap& map, const NeighborGraph& graph, SurfelId id,
                    RandomSource& rng);

  // CRP draw for a surfel that has no label yet (new surfels).
  void assign_initial_label(SurfelMap& map, const NeighborGraph& graph, SurfelId id,
                            RandomSource& rng);

  // Resamples every cluster's (mu, tau) from the conjugate posterior, then
  // garbage-collects empty clusters and relabels surfels.
  void resample_cluster_params(SurfelMap& map, RandomSource& rng);

  // One full pass over the map in the fixed order; updates sample statistics
  // of post-burn-in surfels and increments sweep ages.
  SweepReport run_sweep(SurfelMap& map, const NeighborGraph& graph, RandomSource& rng);

  // Recomputes cluster counts from surfel labels (reconciliation pass used by
  // the parallel mode; in sequential mode it is a no-op by construction).
  void reconcile_counts(const SurfelMap& map);

 private:
  std::vector<int32_t> alive_neighbor_labels(const SurfelMap& map,
                                             const NeighborGraph& graph, SurfelId id) const;

  GibbsParams params_;
  DirectionalModel model_;
  uint64_t sweep_counter_ = 0;
};

}  // namespace dirslam
