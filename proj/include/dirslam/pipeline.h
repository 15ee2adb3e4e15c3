#pragma once

#include <memory>
#include <optional>
#include <string>

#include "dirslam/ate.h"
#include "dirslam/config.h"
#include "dirslam/frame.h"
#include "dirslam/synthetic.h"

namespace dirslam {

// Sequenced frame input: a TUM directory or an on-the-fly synthetic render.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual size_t size() const = 0;
  // Ground truth (when available) refers to the returned frame.
  virtual Frame next_frame(size_t index, GroundTruth* gt) = 0;
  virtual bool has_segment_truth() const { return false; }
};

std::unique_ptr<FrameSource> open_frame_source(const RunConfig& cfg);

struct RunSummary {
  int frames = 0;
  bool aborted_lost = false;
  size_t surfels = 0;
  int clusters = 0;
  double tracking_ms_median = 0;
  double ate_rmse = -1;  // against source ground truth when present
};

// Full pipeline: frontend -> tracker -> map, with Gibbs sweeps interleaved
// (deterministic single-thread mode) or running on worker threads (parallel
// mode). Writes trajectory.txt, map.ply, surfel_stats.csv, track_diag.jsonl,
// sweeps.jsonl and (for synthetic input) surfel_gt.csv into `out_dir`;
// outputs are moved into place atomically at exit. Aborts with partial
// outputs after more than 10 consecutive lost frames.
RunSummary run_slam(const RunConfig& cfg, const std::string& out_dir);

// Orbit trajectory generator used by the synthetic dataset writer: the camera
// circles `target` at `radius`, `deg_per_frame` per step, always looking at
// the target.
Trajectory make_orbit_trajectory(const Eigen::Vector3d& target, double radius,
                                 const Eigen::Vector3d& up, int frames,
                                 double deg_per_frame, double dt = 1.0 / 30.0,
                                 double tilt = 0.35);

}  // namespace dirslam
