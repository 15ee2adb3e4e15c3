#include "dirslam/gibbs.h"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>

namespace dirslam {

std::vector<int32_t> GibbsEngine::alive_neighbor_labels(const SurfelMap& map,
                                                        const NeighborGraph& graph,
                                                        SurfelId id) const {
  std::vector<int32_t> labels;
  for (SurfelId j : graph.neighbors(id)) {
    if (map.alive(j)) labels.push_back(hogwild_load_label(map.surfel(j).label));
  }
  return labels;
}

VonMisesFisher GibbsEngine::normal_conditional(const SurfelMap& map,
                                               const NeighborGraph& graph,
                                               SurfelId id) const {
  const Surfel& s = map.surfel(id);
  Eigen::Vector3d theta = params_.tau_obs * s.obs_normal_sum;

  const int32_t label = hogwild_load_label(s.label);
  if (label != kUnlabeled && label < model_.cluster_count()) {
    const auto& c = model_.cluster(label);
    theta += c.tau * c.mu;
  }

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  bool any = false;
  const double inv_var = 1.0 / (params_.sigma_pl * params_.sigma_pl);
  const Eigen::Vector3d pos = hogwild_load(s.position);
  for (SurfelId j : graph.neighbors(id)) {
    if (!map.alive(j)) continue;
    const Surfel& sj = map.surfel(j);
    if (hogwild_load_label(sj.label) != label) continue;
    const Eigen::Vector3d d = pos - hogwild_load(sj.position);
    scatter += inv_var * d * d.transpose();
    any = true;
  }
  if (any) {
    const VonMisesFisher planarity = bingham_to_vmf(scatter, params_.bingham_literal);
    theta += planarity.concentration * planarity.mode.vec();
  }

  const double norm = theta.norm();
  if (norm < 1e-12) return {UnitVec3(), 0.0};
  return {UnitVec3(theta), norm};
}

GaussianInfo3 GibbsEngine::location_conditional(const SurfelMap& map,
                                                const NeighborGraph& graph,
                                                SurfelId id) const {
  const Surfel& s = map.surfel(id);
  GaussianInfo3 g;
  g.info = s.obs_info;
  g.info_mean = s.obs_info_point;
  const double inv_var = 1.0 / (params_.sigma_pl * params_.sigma_pl);
  const int32_t label = hogwild_load_label(s.label);
  const Eigen::Vector3d n_i = hogwild_load(s.normal);
  for (SurfelId j : graph.neighbors(id)) {
    if (!map.alive(j)) continue;
    const Surfel& sj = map.surfel(j);
    if (hogwild_load_label(sj.label) != label) continue;
    const Eigen::Vector3d n_j = hogwild_load(sj.normal);
    const Eigen::Matrix3d info =
        inv_var * (n_i * n_i.transpose() + n_j * n_j.transpose());
    g.info += info;
    g.info_mean += info * hogwild_load(sj.position);
  }
  return g;
}

void GibbsEngine::sample_normal(SurfelMap& map, const NeighborGraph& graph, SurfelId id,
                                RandomSource& rng) {
  Surfel& s = map.surfel(id);
  const VonMisesFisher post = normal_conditional(map, graph, id);
  const Eigen::Vector3d fresh = sample_vmf(post, rng).vec();
  const int32_t label = hogwild_load_label(s.label);
  if (label != kUnlabeled && label < model_.cluster_count()) {
    model_.update_member_normal(label, hogwild_load(s.normal), fresh);
  }
  hogwild_store(s.normal, fresh);
  if (s.sweep_age + 1 >= params_.burn_in) s.normal_sample_sum += fresh;
}

void GibbsEngine::sample_location(SurfelMap& map, const NeighborGraph& graph, SurfelId id,
                                  RandomSource& rng) {
  Surfel& s = map.surfel(id);
  GaussianInfo3 post = location_conditional(map, graph, id);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
  es.computeDirect(post.info);
  const double emin = es.eigenvalues()[0];
  const double emax = es.eigenvalues()[2];
  if (emin <= 0 || emax / emin > 1e12) {
    post.info += 1e-9 * Eigen::Matrix3d::Identity();
  }
  const Gaussian3 g = post.to_moment();
  const Eigen::Vector3d fresh = g.sample(rng);
  hogwild_store(s.position, fresh);
  if (s.sweep_age + 1 >= params_.burn_in) {
    s.pos_sample_sum += fresh;
    s.pos_sample_outer += fresh * fresh.transpose();
    ++s.sample_count;
  }
}

bool GibbsEngine::sample_label(SurfelMap& map, const NeighborGraph& graph, SurfelId id,
                               RandomSource& rng) {
  Surfel& s = map.surfel(id);
  const int32_t old = hogwild_load_label(s.label);
  const Eigen::Vector3d n = hogwild_load(s.normal);
  if (old != kUnlabeled) model_.remove_from_cluster(old, n);
  const int32_t k = model_.sample_label(n, alive_neighbor_labels(map, graph, id), rng);
  model_.add_to_cluster(k, n);
  hogwild_store_label(s.label, k);
  if (s.sweep_age + 1 >= params_.burn_in) s.top_labels.observe(k);
  return k != old;
}

void GibbsEngine::assign_initial_label(SurfelMap& map, const NeighborGraph& graph,
                                       SurfelId id, RandomSource& rng) {
  (void)graph;
  Surfel& s = map.surfel(id);
  const Eigen::Vector3d n = hogwild_load(s.normal);
  // Seeding uses the plain CRP-vMF conditional without the MRF votes: during
  // a batch of new surfels the neighbor labels are provisional, and letting
  // them vote cascades any early wrong join across a whole surface. The first
  // full sweep applies the complete conditional right after.
  const int32_t k = model_.sample_label(n, {}, rng);
  model_.add_to_cluster(k, n);
  hogwild_store_label(s.label, k);
  // Freshly seeded clusters are prior-diffuse; refreshing the joined
  // cluster's parameters right away lets it tighten with its membership, so
  // batches of surfels from one surface do not get absorbed into an unrelated
  // young cluster before the next parameter sweep.
  model_.refresh_cluster_params(k, rng);
}

void GibbsEngine::resample_cluster_params(SurfelMap& map, RandomSource& rng) {
  // Authoritative recount: resets any drift in the incrementally maintained
  // resultants before drawing the new parameters.
  const int K = model_.cluster_count();
  std::vector<Eigen::Vector3d> sums(K, Eigen::Vector3d::Zero());
  std::vector<int32_t> counts(K, 0);
  for (SurfelId id = 0; id < map.slot_count(); ++id) {
    if (!map.alive(id)) continue;
    const Surfel& s = map.surfel(id);
    if (s.label >= 0 && s.label < K) {
      sums[s.label] += s.normal;
      ++counts[s.label];
    }
  }
  for (int k = 0; k < K; ++k) {
    model_.set_cluster_stats(k, sums[k], counts[k]);
    auto [mu, tau] = model_.sample_posterior_params(sums[k], counts[k], rng);
    model_.set_cluster_params(k, mu, tau);
  }

  const auto remap = model_.garbage_collect();
  bool identity = true;
  for (size_t k = 0; k < remap.size(); ++k) {
    if (remap[k] != static_cast<int32_t>(k)) identity = false;
  }
  if (identity) return;
  for (SurfelId id = 0; id < map.slot_count(); ++id) {
    if (!map.alive(id)) continue;
    Surfel& s = map.surfel(id);
    if (s.label >= 0 && s.label < static_cast<int32_t>(remap.size())) {
      s.label = remap[s.label];
    }
    s.top_labels.remap(remap);
  }
}

SweepReport GibbsEngine::run_sweep(SurfelMap& map, const NeighborGraph& graph,
                                   RandomSource& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepReport report;
  report.index = sweep_counter_++;
  const auto ids = map.alive_ids();
  report.surfels = ids.size();
  if (ids.empty()) {
    report.clusters = model_.cluster_count();
    return report;
  }

  for (SurfelId id : ids) sample_normal(map, graph, id, rng);

  size_t changed = 0;
  for (SurfelId id : ids) {
    if (sample_label(map, graph, id, rng)) ++changed;
  }

  resample_cluster_params(map, rng);

  for (SurfelId id : ids) sample_location(map, graph, id, rng);

  uint64_t total_samples = 0;
  for (SurfelId id : ids) {
    Surfel& s = map.surfel(id);
    ++s.sweep_age;
    total_samples += s.sample_count;
  }

  report.clusters = model_.cluster_count();
  report.label_change_rate = static_cast<double>(changed) / ids.size();
  report.mean_samples_per_surfel = static_cast<double>(total_samples) / ids.size();
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

void GibbsEngine::reconcile_counts(const SurfelMap& map) {
  const int K = model_.cluster_count();
  std::vector<int32_t> counts(K, 0);
  std::vector<Eigen::Vector3d> sums(K, Eigen::Vector3d::Zero());
  for (SurfelId id = 0; id < map.slot_count(); ++id) {
    if (!map.alive(id)) continue;
    const Surfel& s = map.surfel(id);
    if (s.label >= 0 && s.label < K) {
      ++counts[s.label];
      sums[s.label] += s.normal;
    }
  }
  for (int k = 0; k < K; ++k) model_.set_cluster_stats(k, sums[k], counts[k]);
}

}  // namespace dirslam
