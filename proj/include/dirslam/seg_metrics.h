#pragma once

#include <cstdint>
#include <vector>

namespace dirslam {

// Maximum-weight assignment on a square cost matrix (Hungarian algorithm,
// O(n^3)); returns for each row the assigned column. `cost[i][j]` is the
// benefit of assigning row i to column j.
std::vector<int> hungarian_max(const std::vector<std::vector<double>>& benefit);

struct SegmentationScore {
  double accuracy = 0.0;      // best label-permutation match fraction
  int estimated_clusters = 0;  // distinct estimated labels
  int dominant_clusters = 0;   // estimated labels holding >= 5% of the points
  bool greedy_fallback = false;  // label count exceeded 64; matched greedily
};

// Permutation-invariant labeling accuracy: Hungarian assignment on the
// confusion matrix between estimated and ground-truth labels. More than 64
// labels on either side falls back to greedy matching with a warning flag.
SegmentationScore evaluate_segmentation(const std::vector<int32_t>& estimated,
                                        const std::vector<int32_t>& ground_truth);

}  // namespace dirslam
