#pragma once

#include <vector>

#include <Eigen/Core>

#include "dirslam/rng.h"
#include "dirslam/vmf.h"

namespace dirslam {

struct VmfCluster {
  Eigen::Vector3d mu = Eigen::Vector3d::UnitZ();
  double tau = 0.0;
  int32_t count = 0;  // surfels currently assigned
  Eigen::Vector3d normal_sum = Eigen::Vector3d::Zero();  // resultant of member normals
};

struct SegmentationParams {
  double alpha = 2.0;                          // DP concentration
  double a = 1.0;                              // prior pseudo-counts
  double b = 0.3;                              // prior concentration-mode weight, 0 < b < a
  Eigen::Vector3d mu0 = Eigen::Vector3d::UnitZ();
  double lambda_mrf = 1.0;                     // MRF label-smoothing weight
  int tau_grid_size = 512;                     // grid for the tau posterior
  double tau_grid_min = 1e-2;
  double tau_grid_max = 1e4;
};

// DP-vMF mixture bookkeeping: the cluster list, the CRP + MRF label
// conditional, the conjugate parameter posterior, and the base-measure
// marginal. Mixture weights are never represented explicitly; the CRP
// integrates them out.
class DirectionalModel {
 public:
  explicit DirectionalModel(const SegmentationParams& params);

  const SegmentationParams& params() const { return params_; }
  int cluster_count() const { return static_cast<int>(clusters_.size()); }
  const VmfCluster& cluster(int k) const { return clusters_[k]; }
  const std::vector<VmfCluster>& clusters() const { return clusters_; }

  // Membership bookkeeping also maintains each cluster's normal resultant so
  // posterior parameter draws never need a pass over the surfels.
  void add_to_cluster(int k, const Eigen::Vector3d& n) {
    ++clusters_[k].count;
    clusters_[k].normal_sum += n;
  }
  void remove_from_cluster(int k, const Eigen::Vector3d& n) {
    --clusters_[k].count;
    clusters_[k].normal_sum -= n;
  }
  void update_member_normal(int k, const Eigen::Vector3d& old_n, const Eigen::Vector3d& new_n) {
    clusters_[k].normal_sum += new_n - old_n;
  }
  int32_t total_count() const;

  // Normalized categorical over {existing clusters, new cluster}; index K
  // means "open a new cluster". Computed in the log domain and shifted by the
  // maximum so tau ~ 100 factors cannot underflow the result.
  std::vector<double> label_conditional(const Eigen::Vector3d& n,
                                        const std::vector<int32_t>& neighbor_labels) const;

  // Inversion sampling from label_conditional; creates the new cluster with
  // parameters drawn from the posterior given the single normal when the
  // new-cluster slot is picked. Does NOT touch counts; callers own those.
  int sample_label(const Eigen::Vector3d& n, const std::vector<int32_t>& neighbor_labels,
                   RandomSource& rng);

  // Log marginal density of one normal under the base measure, as a function
  // of cos(angle to mu0); interpolated from a precomputed quadrature table.
  double base_log_marginal(double cos_to_mu0) const;

  // Direct quadrature evaluation (no table); used to build the cache and by
  // tests. Valid for any a > b > 0.
  double base_log_marginal_exact(double cos_to_mu0) const;

  // Draws (mu, tau) from the conjugate posterior given the resultant sum of
  // member normals: tau from its marginal on a log-spaced grid categorical,
  // then mu | tau ~ vMF(normalized(theta), |theta| tau).
  std::pair<Eigen::Vector3d, double> sample_posterior_params(
      const Eigen::Vector3d& normal_sum, int member_count, RandomSource& rng) const;

  // Posterior over tau on an arbitrary grid (unnormalized log values);
  // exposed so tests can run dense-grid credible-interval oracles.
  std::vector<double> tau_log_posterior(const std::vector<double>& taus,
                                        const Eigen::Vector3d& normal_sum,
                                        int member_count) const;

  int create_cluster(const Eigen::Vector3d& n, RandomSource& rng);
  void set_cluster_params(int k, const Eigen::Vector3d& mu, double tau);
  void set_cluster_stats(int k, const Eigen::Vector3d& normal_sum, int32_t count) {
    clusters_[k].normal_sum = normal_sum;
    clusters_[k].count = count;
  }

  // Redraws cluster k's (mu, tau) from the posterior given its current
  // members; used while seeding labels so young clusters tighten as soon as
  // aligned members join instead of staying prior-diffuse.
  void refresh_cluster_params(int k, RandomSource& rng) {
    auto [mu, tau] = sample_posterior_params(clusters_[k].normal_sum, clusters_[k].count, rng);
    set_cluster_params(k, mu, tau);
  }

  // Drops empty clusters. Returns the old-index -> new-index map (-1 for
  // removed) so callers can relabel surfels.
  std::vector<int32_t> garbage_collect();

 private:
  SegmentationParams params_;
  std::vector<VmfCluster> clusters_;
  std::vector<double> tau_grid_;
  std::vector<double> base_marginal_table_;  // log densities over cos in [-1, 1]
};

}  // namespace dirslam
