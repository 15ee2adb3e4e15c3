#include "dirslam/seg_metrics.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace dirslam {

std::vector<int> hungarian_max(const std::vector<std::vector<double>>& benefit) {
  const int n = static_cast<int>(benefit.size());
  if (n == 0) return {};
  // Classic potentials-based assignment on the negated (cost) matrix.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -benefit[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

SegmentationScore evaluate_segmentation(const std::vector<int32_t>& estimated,
                                        const std::vector<int32_t>& ground_truth) {
  if (estimated.size() != ground_truth.size() || estimated.empty()) {
    throw std::invalid_argument("label vectors must be non-empty and equal-sized");
  }
  // Compact both label sets.
  std::map<int32_t, int> est_ids, gt_ids;
  for (int32_t z : estimated)
    if (!est_ids.count(z)) est_ids[z] = static_cast<int>(est_ids.size());
  for (int32_t z : ground_truth)
    if (!gt_ids.count(z)) gt_ids[z] = static_cast<int>(gt_ids.size());

  const int ke = static_cast<int>(est_ids.size());
  const int kg = static_cast<int>(gt_ids.size());
  const int n = std::max(ke, kg);
  std::vector<std::vector<double>> confusion(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < estimated.size(); ++i) {
    confusion[est_ids[estimated[i]]][gt_ids[ground_truth[i]]] += 1.0;
  }

  SegmentationScore score;
  score.estimated_clusters = ke;
  const double dominant_min = 0.05 * static_cast<double>(estimated.size());
  for (int i = 0; i < ke; ++i) {
    double row = 0;
    for (int j = 0; j < n; ++j) row += confusion[i][j];
    if (row >= dominant_min) ++score.dominant_clusters;
  }

  double matched = 0.0;
  if (n > 64) {
    score.greedy_fallback = true;
    std::fprintf(stderr, "evaluate_segmentation: %d labels, greedy matching\n", n);
    std::vector<char> used(n, false);
    std::vector<std::pair<double, std::pair<int, int>>> cells;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cells.push_back({confusion[i][j], {i, j}});
    std::sort(cells.rbegin(), cells.rend());
    std::vector<char> used_row(n, false), used_col(n, false);
    for (const auto& [val, ij] : cells) {
      if (used_row[ij.first] || used_col[ij.second]) continue;
      used_row[ij.first] = used_col[ij.second] = true;
      matched += val;
    }
  } else {
    const auto assign = hungarian_max(confusion);
    for (int i = 0; i < n; ++i) {
      if (assign[i] >= 0) matched += confusion[i][assign[i]];
    }
  }
  score.accuracy = matched / static_cast<double>(estimated.size());
  return score;
}

}  // namespace dirslam
