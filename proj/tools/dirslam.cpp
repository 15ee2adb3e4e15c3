// Command-line entry points: SLAM runs, trajectory/segmentation evaluation,
// the plane-sparsity experiment, and synthetic dataset generation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dirslam/ate.h"
#include "dirslam/pipeline.h"
#include "dirslam/plane_sparsity.h"
#include "dirslam/ply_io.h"
#include "dirslam/seg_metrics.h"
#include "dirslam/tum_io.h"

using namespace dirslam;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir,
            int64_t seed_override, bool single_thread, bool dump_config) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
  if (seed_override >= 0) cfg.run_seed = static_cast<uint64_t>(seed_override);
  if (single_thread) cfg.run_mode = "single";
  if (dump_config) {
    cfg.dump(std::cout);
    return 0;
  }
  if (out_dir.empty()) {
    std::cerr << "run: --out is required\n";
    return 1;
  }
  const RunSummary s = run_slam(cfg, out_dir);
  std::printf("frames=%d surfels=%zu clusters=%d tracking_ms_median=%.2f\n", s.frames,
              s.surfels, s.clusters, s.tracking_ms_median);
  if (s.ate_rmse >= 0) std::printf("ate_rmse_m=%.6f\n", s.ate_rmse);
  if (s.aborted_lost) {
    std::fprintf(stderr, "aborted: tracking lost for more than 10 consecutive frames\n");
    return 2;
  }
  return 0;
}

int cmd_eval_ate(const std::string& est_path, const std::string& gt_path) {
  const Trajectory est = read_trajectory_tum(est_path);
  const Trajectory gt = read_trajectory_tum(gt_path);
  const TrajectoryReport report = evaluate_ate(est, gt);
  double mx = 0;
  for (double e : report.errors) mx = std::max(mx, e);
  std::printf("matched=%zu ate_rmse_m=%.6f max_error_m=%.6f\n", report.matched,
              report.rmse, mx);
  return 0;
}

int cmd_eval_seg(const std::string& map_path, const std::string& gt_path) {
  const auto verts = read_ply_vertices(map_path);
  std::ifstream gt_in(gt_path);
  if (!gt_in) {
    std::cerr << "cannot open " << gt_path << "\n";
    return 1;
  }
  std::vector<int32_t> est, truth;
  std::string line;
  std::getline(gt_in, line);  // header
  while (std::getline(gt_in, line)) {
    size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) continue;
    const size_t row = std::stoul(line.substr(0, c1));
    const int32_t seg = std::stoi(line.substr(c2 + 1));
    if (row < verts.size() && seg >= 0) {
      est.push_back(static_cast<int32_t>(verts[row].label));
      truth.push_back(seg);
    }
  }
  if (est.empty()) {
    std::cerr << "no labeled rows matched the map\n";
    return 1;
  }
  const SegmentationScore score = evaluate_segmentation(est, truth);
  std::printf("points=%zu accuracy=%.4f clusters=%d dominant_clusters=%d\n", est.size(),
              score.accuracy, score.estimated_clusters, score.dominant_clusters);
  return 0;
}

int cmd_plane_sparsity(const std::string& cloud_path, int max_planes, int trials,
                       double threshold, double max_angle, uint64_t seed,
                       const std::string& out_csv) {
  const auto verts = read_ply_vertices(cloud_path);
  std::vector<SurfacePoint> cloud;
  cloud.reserve(verts.size());
  for (const auto& v : verts) {
    SurfacePoint p;
    p.position = {v.x, v.y, v.z};
    p.normal = Eigen::Vector3d(v.nx, v.ny, v.nz).normalized();
    p.segment = static_cast<int>(v.label);
    cloud.push_back(p);
  }
  std::vector<int> counts;
  for (int p = 1; p <= max_planes; p = p < 10 ? p + 1 : p + std::max(1, p / 4)) {
    counts.push_back(p);
  }
  if (counts.back() != max_planes) counts.push_back(max_planes);
  RandomSource rng(seed);
  const auto curve =
      plane_sparsity_experiment(cloud, counts, threshold, max_angle, trials, rng);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_csv.empty()) {
    file.open(out_csv);
    out = &file;
  }
  *out << "planes,mean_inlier_fraction\n";
  for (const auto& pt : curve) {
    *out << pt.planes << ',' << pt.mean_inlier_fraction << '\n';
  }
  return 0;
}

int cmd_synth(const std::string& scene_path, int frames, const std::string& out_dir,
              const std::string& traj_path, bool noise, uint64_t seed, int width,
              int height, double focal) {
  namespace fs = std::filesystem;
  const SyntheticScene scene = SyntheticScene::load(scene_path);
  Intrinsics K;
  K.width = width;
  K.height = height;
  K.fx = K.fy = focal;
  K.cx = 0.5 * width - 0.5;
  K.cy = 0.5 * height - 0.5;

  Trajectory traj;
  if (!traj_path.empty()) {
    traj = read_trajectory_tum(traj_path);
  } else {
    // Default: gentle orbit around the scene centroid.
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : scene.patches) centroid += p.origin;
    centroid /= std::max<size_t>(1, scene.patches.size());
    traj = make_orbit_trajectory(centroid, 1.8, {0, 0, 1}, frames, 0.5);
  }
  if (frames > 0 && static_cast<size_t>(frames) < traj.size()) traj.resize(frames);

  fs::create_directories(out_dir + "/rgb");
  fs::create_directories(out_dir + "/depth");
  std::ofstream rgb_idx(out_dir + "/rgb.txt"), depth_idx(out_dir + "/depth.txt");
  rgb_idx << "# timestamp filename\n";
  depth_idx << "# timestamp filename\n";
  RandomSource rng(seed);
  DepthNoiseModel noise_model;
  for (const auto& tp : traj) {
    const Frame frame = render_synthetic(scene, tp.pose, K, tp.timestamp, noise,
                                         noise_model, noise ? &rng : nullptr, nullptr);
    std::string rl, dl;
    write_tum_frame(out_dir, frame, rl, dl);
    rgb_idx << rl;
    depth_idx << dl;
  }
  write_trajectory_tum(out_dir + "/groundtruth.txt", traj);
  std::printf("wrote %zu frames to %s\n", traj.size(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"direction-aware semi-dense RGB-D SLAM"};
  app.require_subcommand(1);

  // run
  std::string config_path, out_dir;
  int64_t seed_override = -1;
  bool single_thread = false, dump_config = false;
  auto* run = app.add_subcommand("run", "run SLAM on a TUM directory or synthetic scene");
  run->add_option("--config", config_path, "config file (defaults when omitted)");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed_override, "override run.seed");
  run->add_flag("--single-thread", single_thread, "force deterministic single-thread mode");
  run->add_flag("--dump-config", dump_config, "print the effective config and exit");

  // eval-ate
  std::string est_path, gt_path;
  auto* ate = app.add_subcommand("eval-ate", "absolute trajectory error");
  ate->add_option("--est", est_path)->required();
  ate->add_option("--gt", gt_path)->required();

  // eval-seg
  std::string map_path, seg_gt_path;
  auto* seg = app.add_subcommand("eval-seg", "segmentation accuracy on synthetic truth");
  seg->add_option("--map", map_path)->required();
  seg->add_option("--gt", seg_gt_path)->required();

  // plane-sparsity
  std::string cloud_path, sparsity_csv;
  int max_planes = 50, trials = 20;
  double threshold = 0.02, max_angle = 30.0;
  uint64_t sparsity_seed = 0;
  auto* sparsity = app.add_subcommand("plane-sparsity", "inlier fraction vs plane count");
  sparsity->add_option("--cloud", cloud_path, "PLY cloud with normals")->required();
  sparsity->add_option("--max-planes", max_planes);
  sparsity->add_option("--trials", trials);
  sparsity->add_option("--threshold", threshold, "inlier distance, meters");
  sparsity->add_option("--max-angle", max_angle, "normal agreement, degrees");
  sparsity->add_option("--seed", sparsity_seed);
  sparsity->add_option("--out", sparsity_csv, "write curve CSV here");

  // synth
  std::string scene_path, synth_out, synth_traj;
  int synth_frames = 100, synth_w = 640, synth_h = 480;
  double synth_f = 525.0;
  bool synth_noise = true;
  uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "render a synthetic TUM-format dataset");
  synth->add_option("--scene", scene_path)->required();
  synth->add_option("--frames", synth_frames);
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--traj", synth_traj, "trajectory file (default: orbit)");
  synth->add_option("--noise", synth_noise, "sensor noise on/off");
  synth->add_option("--seed", synth_seed);
  synth->add_option("--width", synth_w);
  synth->add_option("--height", synth_h);
  synth->add_option("--focal", synth_f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, out_dir, seed_override, single_thread, dump_config);
    }
    if (ate->parsed()) return cmd_eval_ate(est_path, gt_path);
    if (seg->parsed()) return cmd_eval_seg(map_path, seg_gt_path);
    if (sparsity->parsed()) {
      return cmd_plane_sparsity(cloud_path, max_planes, trials, threshold, max_angle,
                                sparsity_seed, sparsity_csv);
    }
    if (synth->parsed()) {
      return cmd_synth(scene_path, synth_frames, synth_out, synth_traj, synth_noise,
                       synth_seed, synth_w, synth_h, synth_f);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
