#pragma once

#include <array>
#include <atomic>
#include <cstdint>

#include <Eigen/Core>

namespace dirslam {

using SurfelId = uint32_t;
constexpr int32_t kUnlabeled = -1;

// Component-wise relaxed atomic access to shared Gibbs state. Compiles to
// plain moves on x86, so the sequential path pays nothing; under the parallel
// sampler threads a read may mix components of two writes (Hogwild reads),
// but individual doubles never tear.
inline Eigen::Vector3d hogwild_load(const Eigen::Vector3d& v) {
  auto& m = const_cast<Eigen::Vector3d&>(v);
  return {std::atomic_ref<double>(m.x()).load(std::memory_order_relaxed),
          std::atomic_ref<double>(m.y()).load(std::memory_order_relaxed),
          std::atomic_ref<double>(m.z()).load(std::memory_order_relaxed)};
}

inline void hogwild_store(Eigen::Vector3d& v, const Eigen::Vector3d& x) {
  std::atomic_ref<double>(v.x()).store(x.x(), std::memory_order_relaxed);
  std::atomic_ref<double>(v.y()).store(x.y(), std::memory_order_relaxed);
  std::atomic_ref<double>(v.z()).store(x.z(), std::memory_order_relaxed);
}

inline int32_t hogwild_load_label(const int32_t& z) {
  return std::atomic_ref<int32_t>(const_cast<int32_t&>(z)).load(std::memory_order_relaxed);
}

inline void hogwild_store_label(int32_t& z, int32_t v) {
  std::atomic_ref<int32_t>(z).store(v, std::memory_order_relaxed);
}

// Space-saving counter with three slots: tracks the most frequent labels of a
// stream incrementally. On overflow the minimum-count slot is evicted and the
// newcomer inherits min_count + 1.
class LabelCounter3 {
 public:
  void observe(int32_t label) {
    int min_slot = 0;
    for (int i = 0; i < 3; ++i) {
      if (labels_[i] == label) {
        ++counts_[i];
        return;
      }
      if (labels_[i] == kUnlabeled) {
        labels_[i] = label;
        counts_[i] = 1;
        return;
      }
      if (counts_[i] < counts_[min_slot]) min_slot = i;
    }
    labels_[min_slot] = label;
    ++counts_[min_slot];
  }

  int32_t argmax() const {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (counts_[i] > counts_[best]) best = i;
    return labels_[best];
  }

  bool empty() const { return labels_[0] == kUnlabeled; }

  // Applies a cluster renumbering after garbage collection; slots whose label
  // disappeared are dropped (their evidence is stale anyway).
  void remap(const std::vector<int32_t>& old_to_new) {
    for (int i = 0; i < 3; ++i) {
      if (labels_[i] == kUnlabeled) continue;
      const int32_t m = labels_[i] < static_cast<int32_t>(old_to_new.size())
                            ? old_to_new[labels_[i]]
                            : kUnlabeled;
      if (m == kUnlabeled) {
        labels_[i] = kUnlabeled;
        counts_[i] = 0;
      } else {
        labels_[i] = m;
      }
    }
  }

 private:
  std::array<int32_t, 3> labels_{kUnlabeled, kUnlabeled, kUnlabeled};
  std::array<uint32_t, 3> counts_{0, 0, 0};
};

// One map surfel: current Gibbs state, static attributes, per-sample and
// per-observation accumulator statistics. Observation sums bake in the camera
// pose at observation time; older poses are never re-estimated.
struct Surfel {
  SurfelId id = 0;
  bool alive = true;

  // Gibbs chain state.
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // p_i
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();   // n_i, unit
  int32_t label = kUnlabeled;                          // z_i

  // Attributes.
  double intensity = 0.0;  // running mean of observed intensities
  std::array<uint8_t, 3> rgb{0, 0, 0};
  double radius = 0.0;
  float grad_mag = 0.f;  // ||grad I|| at the last observed pixel

  // Location sample statistics (law-of-large-numbers estimates).
  Eigen::Vector3d pos_sample_sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d pos_sample_outer = Eigen::Matrix3d::Zero();
  uint32_t sample_count = 0;

  // Normal sample statistics.
  Eigen::Vector3d normal_sample_sum = Eigen::Vector3d::Zero();

  // Observation accumulators (world frame).
  Eigen::Matrix3d obs_info = Eigen::Matrix3d::Zero();        // sum of precisions
  Eigen::Vector3d obs_info_point = Eigen::Vector3d::Zero();  // sum precision * T x^p
  Eigen::Vector3d obs_normal_sum = Eigen::Vector3d::Zero();  // sum R_t x^n
  uint32_t obs_count = 0;                                    // |O_i| >= 1

  // First observation, published until the sample estimates converge.
  Eigen::Vector3d initial_position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d initial_cov = Eigen::Matrix3d::Identity();
  Eigen::Vector3d initial_normal = Eigen::Vector3d::UnitZ();

  LabelCounter3 top_labels;
  uint32_t sweep_age = 0;
};

// Symmetrized point-to-plane MRF potential between two surfels; 1 when the
// labels differ, exp of the two out-of-plane deviations otherwise.
inline double mrf_potential(const Eigen::Vector3d& pa, const Eigen::Vector3d& na,
                            int32_t za, const Eigen::Vector3d& pb,
                            const Eigen::Vector3d& nb, int32_t zb, double sigma_pl) {
  if (za != zb) return 1.0;
  const Eigen::Vector3d d = pb - pa;
  const double ea = na.dot(d);
  const double eb = nb.dot(d);
  return std::exp(-(ea * ea + eb * eb) / (2.0 * sigma_pl * sigma_pl));
}

inline double mrf_neg_log_potential(const Eigen::Vector3d& pa, const Eigen::Vector3d& na,
                                    int32_t za, const Eigen::Vector3d& pb,
                                    const Eigen::Vector3d& nb, int32_t zb,
                                    double sigma_pl) {
  if (za != zb) return 0.0;
  const Eigen::Vector3d d = pb - pa;
  const double ea = na.dot(d);
  const double eb = nb.dot(d);
  return (ea * ea + eb * eb) / (2.0 * sigma_pl * sigma_pl);
}

}  // namespace dirslam
