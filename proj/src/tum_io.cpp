#include "dirslam/tum_io.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dirslam/png_io.h"

namespace dirslam {

namespace {

struct IndexEntry {
  double t;
  std::string file;
};

std::vector<IndexEntry> read_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing index file: " + path);
  std::vector<IndexEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    IndexEntry e;
    if (ss >> e.t >> e.file) out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  return out;
}

}  // namespace

TumSequence TumSequence::open(const std::string& directory, const Intrinsics& K,
                              double max_dt) {
  TumSequence seq;
  seq.dir_ = directory;
  seq.intrinsics_ = K;
  const auto rgb = read_index(directory + "/rgb.txt");
  const auto depth = read_index(directory + "/depth.txt");

  // Nearest-timestamp association of rgb to depth.
  size_t j = 0;
  for (const auto& d : depth) {
    while (j + 1 < rgb.size() &&
           std::abs(rgb[j + 1].t - d.t) <= std::abs(rgb[j].t - d.t)) {
      ++j;
    }
    if (rgb.empty() || std::abs(rgb[j].t - d.t) > max_dt) {
      std::fprintf(stderr, "tum: skipping depth frame %.6f (no rgb within %.3fs)\n", d.t,
                   max_dt);
      continue;
    }
    seq.pairs_.push_back({rgb[j].t, d.t, rgb[j].file, d.file});
  }

  const std::string gt_path = directory + "/groundtruth.txt";
  if (std::filesystem::exists(gt_path)) {
    seq.ground_truth_ = read_trajectory_tum(gt_path);
  }
  return seq;
}

Frame TumSequence::load_frame(size_t i) const {
  const auto& p = pairs_[i];
  Frame frame;
  frame.timestamp = p.t_depth;
  frame.intrinsics = intrinsics_;

  const Image16 d16 = read_png16(dir_ + "/" + p.depth_file);
  frame.depth = ImageF(d16.width, d16.height);
  for (size_t k = 0; k < d16.data.size(); ++k) {
    frame.depth.data[k] = d16.data[k] == 0
                              ? 0.f
                              : static_cast<float>(d16.data[k] / kTumDepthScale);
  }

  const ImageRgb8 rgb = read_png_rgb8(dir_ + "/" + p.rgb_file);
  if (rgb.width != d16.width || rgb.height != d16.height) {
    throw std::runtime_error("tum: rgb/depth size mismatch at frame " + std::to_string(i));
  }
  frame.intensity = ImageF(rgb.width, rgb.height);
  frame.rgb = rgb.data;
  for (size_t k = 0; k < rgb.data.size(); ++k) {
    const auto& c = rgb.data[k];
    frame.intensity.data[k] =
        static_cast<float>((0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]) / 255.0);
  }
  finalize_frame(frame);
  return frame;
}

Trajectory read_trajectory_tum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  Trajectory traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) continue;
    TimedPose tp;
    tp.timestamp = t;
    tp.pose.translation = {tx, ty, tz};
    tp.pose.rotation = Rotation3(Eigen::Quaterniond(qw, qx, qy, qz));
    traj.push_back(tp);
  }
  std::sort(traj.begin(), traj.end(),
            [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return traj;
}

void write_trajectory_tum(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  char buf[256];
  for (const auto& tp : traj) {
    const Eigen::Quaterniond q = tp.pose.rotation.quaternion();
    const Eigen::Vector3d& t = tp.pose.translation;
    std::snprintf(buf, sizeof(buf), "%.6f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n",
                  tp.timestamp, t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out << buf;
  }
}

void write_tum_frame(const std::string& directory, const Frame& frame,
                     std::string& rgb_index_line, std::string& depth_index_line) {
  char name[64];
  std::snprintf(name, sizeof(name), "%.6f.png", frame.timestamp);

  Image16 d16;
  d16.width = frame.depth.width;
  d16.height = frame.depth.height;
  d16.data.resize(frame.depth.data.size());
  for (size_t k = 0; k < d16.data.size(); ++k) {
    const double units = std::round(frame.depth.data[k] * kTumDepthScale);
    d16.data[k] = static_cast<uint16_t>(std::clamp(units, 0.0, 65535.0));
  }
  write_png16(directory + "/depth/" + name, d16);

  ImageRgb8 rgb;
  rgb.width = frame.intensity.width;
  rgb.height = frame.intensity.height;
  if (!frame.rgb.empty()) {
    rgb.data = frame.rgb;
  } else {
    rgb.data.resize(frame.intensity.data.size());
    for (size_t k = 0; k < rgb.data.size(); ++k) {
      const auto g = static_cast<uint8_t>(
          std::lround(std::clamp(frame.intensity.data[k], 0.f, 1.f) * 255.f));
      rgb.data[k] = {g, g, g};
    }
  }
  write_png_rgb8(directory + "/rgb/" + name, rgb);

  char line[128];
  std::snprintf(line, sizeof(line), "%.6f rgb/%s\n", frame.timestamp, name);
  rgb_index_line = line;
  std::snprintf(line, sizeof(line), "%.6f depth/%s\n", frame.timestamp, name);
  depth_index_line = line;
}

}  // namespace dirslam
