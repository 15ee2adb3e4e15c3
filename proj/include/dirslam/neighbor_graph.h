#pragma once

#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "dirslam/rng.h"
#include "dirslam/surfel_map.h"

namespace dirslam {

// k-nearest-neighbor graph over surfels under the negative log MRF potential,
// with Euclidean distance and id as deterministic tie-breakers (different-
// label pairs all sit at potential distance zero). Valid neighbors must lie
// within `radius` meters. The spatial hash is keyed on creation positions
// (surfels drift by millimeters, far less than one 0.2 m cell), while the
// radius test and potentials use current Gibbs-state values. Edge lists are
// frozen between updates; the revisit pass refreshes random surfels to pick
// up new neighbors, label changes and deletions.
//
// Updates run behind an internal reader-writer lock so the builder thread can
// refresh edges while sampler threads query neighborhoods; neighbors() hands
// out a copy for that reason.
class NeighborGraph {
 public:
  struct Config {
    int k = 12;
    double radius = 0.2;
  };

  NeighborGraph(const Config& cfg, double sigma_pl) : cfg_(cfg), sigma_pl_(sigma_pl) {}

  // Registers a new surfel in the spatial index and computes its neighbors.
  void add_surfel(const SurfelMap& map, SurfelId id);

  // Recomputes the adjacency of one surfel from current map state.
  void knn_update(const SurfelMap& map, SurfelId id);

  // Removes surfels from the index; stale references in other adjacency
  // lists are purged lazily by knn_update / callers' alive checks.
  void remove(const SurfelMap& map, std::span<const SurfelId> ids);

  // Randomly revisits up to `count` surfels and refreshes their neighbors.
  void revisit(const SurfelMap& map, int count, RandomSource& rng);

  std::vector<SurfelId> neighbors(SurfelId id) const {
    std::shared_lock lock(mutex_);
    return id < adjacency_.size() ? adjacency_[id] : std::vector<SurfelId>{};
  }

  const Config& config() const { return cfg_; }

 private:
  using CellKey = uint64_t;
  CellKey cell_of(const Eigen::Vector3d& p) const;
  void gather_candidates(const SurfelMap& map, SurfelId id,
                         std::vector<SurfelId>& out) const;
  void knn_update_locked(const SurfelMap& map, SurfelId id);

  Config cfg_;
  double sigma_pl_;
  mutable std::shared_mutex mutex_;
  std::vector<std::vector<SurfelId>> adjacency_;
  std::vector<Eigen::Vector3d> anchor_;  // creation positions, by id
  std::unordered_map<CellKey, std::vector<SurfelId>> grid_;
};

}  // namespace dirslam
