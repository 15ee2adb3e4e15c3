#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dirslam/ate.h"
#include "dirslam/frame.h"

namespace dirslam {

// TUM RGB-D sequence directory: rgb.txt / depth.txt index files (lines of
// `timestamp filename`), 16-bit depth PNGs at 1/5000 m per unit, and an
// optional groundtruth.txt with `t tx ty tz qx qy qz qw` lines.
class TumSequence {
 public:
  // Associates rgb and depth by nearest timestamp within `max_dt`; unmatched
  // entries are skipped with a warning on stderr. Throws when the index files
  // are missing.
  static TumSequence open(const std::string& directory, const Intrinsics& K,
                          double max_dt = 0.02);

  size_t size() const { return pairs_.size(); }
  double timestamp(size_t i) const { return pairs_[i].t_depth; }

  // Decodes one frame (intensity from rgb when present, plus gradients).
  Frame load_frame(size_t i) const;

  const Trajectory& ground_truth() const { return ground_truth_; }
  bool has_ground_truth() const { return !ground_truth_.empty(); }

 private:
  struct PairEntry {
    double t_rgb = 0, t_depth = 0;
    std::string rgb_file, depth_file;
  };
  std::string dir_;
  Intrinsics intrinsics_;
  std::vector<PairEntry> pairs_;
  Trajectory ground_truth_;
};

constexpr double kTumDepthScale = 5000.0;  // depth PNG units per meter

// Trajectory files in TUM format (`t tx ty tz qx qy qz qw`).
Trajectory read_trajectory_tum(const std::string& path);
void write_trajectory_tum(const std::string& path, const Trajectory& traj);

// Writes a frame pair into an already-prepared TUM directory layout and
// returns the index lines to append; used by the synthetic dataset writer.
void write_tum_frame(const std::string& directory, const Frame& frame,
                     std::string& rgb_index_line, std::string& depth_index_line);

}  // namespace dirslam
