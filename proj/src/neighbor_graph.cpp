#include "dirslam/neighbor_graph.h"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace dirslam {

NeighborGraph::CellKey NeighborGraph::cell_of(const Eigen::Vector3d& p) const {
  const double inv = 1.0 / cfg_.radius;
  const auto cx = static_cast<int64_t>(std::floor(p.x() * inv));
  const auto cy = static_cast<int64_t>(std::floor(p.y() * inv));
  const auto cz = static_cast<int64_t>(std::floor(p.z() * inv));
  return (static_cast<uint64_t>(cx & 0x1fffff) << 42) |
         (static_cast<uint64_t>(cy & 0x1fffff) << 21) |
         static_cast<uint64_t>(cz & 0x1fffff);
}

void NeighborGraph::add_surfel(const SurfelMap& map, SurfelId id) {
  std::unique_lock lock(mutex_);
  if (adjacency_.size() <= id) {
    adjacency_.resize(id + 1);
    anchor_.resize(id + 1, Eigen::Vector3d::Zero());
  }
  anchor_[id] = hogwild_load(map.surfel(id).position);
  grid_[cell_of(anchor_[id])].push_back(id);
  knn_update_locked(map, id);
}

void NeighborGraph::gather_candidates(const SurfelMap& map, SurfelId id,
                                      std::vector<SurfelId>& out) const {
  out.clear();
  const Eigen::Vector3d p = hogwild_load(map.surfel(id).position);
  const double inv = 1.0 / cfg_.radius;
  const auto bx = static_cast<int64_t>(std::floor(p.x() * inv));
  const auto by = static_cast<int64_t>(std::floor(p.y() * inv));
  const auto bz = static_cast<int64_t>(std::floor(p.z() * inv));
  for (int64_t dx = -1; dx <= 1; ++dx) {
    for (int64_t dy = -1; dy <= 1; ++dy) {
      for (int64_t dz = -1; dz <= 1; ++dz) {
        const CellKey key = (static_cast<uint64_t>((bx + dx) & 0x1fffff) << 42) |
                            (static_cast<uint64_t>((by + dy) & 0x1fffff) << 21) |
                            static_cast<uint64_t>((bz + dz) & 0x1fffff);
        auto it = grid_.find(key);
        if (it == grid_.end()) continue;
        for (SurfelId j : it->second) {
          if (j != id && map.alive(j)) out.push_back(j);
        }
      }
    }
  }
}

void NeighborGraph::knn_update(const SurfelMap& map, SurfelId id) {
  std::unique_lock lock(mutex_);
  knn_update_locked(map, id);
}

void NeighborGraph::knn_update_locked(const SurfelMap& map, SurfelId id) {
  if (!map.alive(id) || id >= adjacency_.size()) return;
  std::vector<SurfelId> candidates;
  gather_candidates(map, id, candidates);

  const Surfel& si = map.surfel(id);
  const Eigen::Vector3d pi = hogwild_load(si.position);
  const Eigen::Vector3d ni = hogwild_load(si.normal);
  const int32_t zi = hogwild_load_label(si.label);
  struct Entry {
    double key;
    double euclid;
    SurfelId id;
  };
  std::vector<Entry> entries;
  entries.reserve(candidates.size());
  for (SurfelId j : candidates) {
    const Surfel& sj = map.surfel(j);
    const Eigen::Vector3d pj = hogwild_load(sj.position);
    const double d = (pj - pi).norm();
    if (d > cfg_.radius) continue;
    const double nlp = mrf_neg_log_potential(pi, ni, zi, pj, hogwild_load(sj.normal),
                                             hogwild_load_label(sj.label), sigma_pl_);
    entries.push_back({nlp, d, j});
  }
  auto cmp = [](const Entry& a, const Entry& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.euclid != b.euclid) return a.euclid < b.euclid;
    return a.id < b.id;
  };
  const size_t k = std::min<size_t>(cfg_.k, entries.size());
  std::partial_sort(entries.begin(), entries.begin() + k, entries.end(), cmp);
  auto& adj = adjacency_[id];
  adj.clear();
  for (size_t i = 0; i < k; ++i) adj.push_back(entries[i].id);
}

void NeighborGraph::remove(const SurfelMap& map, std::span<const SurfelId> ids) {
  (void)map;
  std::unique_lock lock(mutex_);
  for (SurfelId id : ids) {
    if (id >= anchor_.size()) continue;
    auto it = grid_.find(cell_of(anchor_[id]));
    if (it != grid_.end()) {
      auto& cell = it->second;
      cell.erase(std::remove(cell.begin(), cell.end(), id), cell.end());
    }
    adjacency_[id].clear();
  }
}

void NeighborGraph::revisit(const SurfelMap& map, int count, RandomSource& rng) {
  const auto ids = map.alive_ids();
  if (ids.empty()) return;
  for (int i = 0; i < count; ++i) {
    std::unique_lock lock(mutex_);
    knn_update_locked(map, ids[rng.uniform_int(static_cast<int>(ids.size()))]);
  }
}

}  // namespace dirslam
