#include "dirslam/pipeline.h"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include "dirslam/association.h"
#include "dirslam/gibbs.h"
#include "dirslam/icp.h"
#include "dirslam/neighbor_graph.h"
#include "dirslam/ply_io.h"
#include "dirslam/tum_io.h"

namespace dirslam {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

Intrinsics intrinsics_from(const RunConfig& cfg) {
  Intrinsics K;
  K.width = cfg.camera_width;
  K.height = cfg.camera_height;
  K.fx = cfg.camera_fx;
  K.fy = cfg.camera_fy;
  K.cx = cfg.camera_cx;
  K.cy = cfg.camera_cy;
  return K;
}

class TumSource : public FrameSource {
 public:
  TumSource(const RunConfig& cfg)
      : seq_(TumSequence::open(cfg.input_tum, intrinsics_from(cfg))),
        limit_(cfg.input_frames > 0
                   ? std::min<size_t>(cfg.input_frames, seq_.size())
                   : seq_.size()) {}
  size_t size() const override { return limit_; }
  Frame next_frame(size_t index, GroundTruth* gt) override {
    if (gt) *gt = GroundTruth{};
    return seq_.load_frame(index);
  }
  const Trajectory& ground_truth() const { return seq_.ground_truth(); }

 private:
  TumSequence seq_;
  size_t limit_;
};

class SyntheticSource : public FrameSource {
 public:
  SyntheticSource(const RunConfig& cfg)
      : scene_(SyntheticScene::load(cfg.input_scene)),
        trajectory_(read_trajectory_tum(cfg.input_trajectory)),
        K_(intrinsics_from(cfg)),
        noise_on_(cfg.input_noise),
        rng_(RandomSource(cfg.run_seed).fork(0xf00d)) {
    limit_ = cfg.input_frames > 0
                 ? std::min<size_t>(cfg.input_frames, trajectory_.size())
                 : trajectory_.size();
  }
  size_t size() const override { return limit_; }
  Frame next_frame(size_t index, GroundTruth* gt) override {
    return render_synthetic(scene_, trajectory_[index].pose, K_,
                            trajectory_[index].timestamp, noise_on_, noise_model_,
                            noise_on_ ? &rng_ : nullptr, gt);
  }
  bool has_segment_truth() const override { return true; }
  const Trajectory& ground_truth() const { return trajectory_; }

 private:
  SyntheticScene scene_;
  Trajectory trajectory_;
  Intrinsics K_;
  bool noise_on_;
  DepthNoiseModel noise_model_;
  RandomSource rng_;
  size_t limit_ = 0;
};

// Everything the five workers share.
struct PipelineState {
  explicit PipelineState(const RunConfig& cfg)
      : cfg(cfg),
        graph({cfg.map_knn_k, cfg.map_knn_radius}, cfg.map_sigma_pl),
        engine(make_gibbs_params(cfg), make_seg_params(cfg)),
        track_cfg(make_track_cfg(cfg)),
        base_rng(cfg.run_seed) {}

  static GibbsParams make_gibbs_params(const RunConfig& cfg) {
    GibbsParams p;
    p.sigma_pl = cfg.map_sigma_pl;
    p.tau_obs = cfg.map_tau_obs;
    p.burn_in = cfg.gibbs_burn_in;
    p.min_samples = cfg.gibbs_min_samples;
    p.bingham_literal = cfg.bingham_literal_e2e2;
    return p;
  }
  static SegmentationParams make_seg_params(const RunConfig& cfg) {
    SegmentationParams p;
    p.alpha = cfg.seg_alpha;
    p.a = cfg.seg_a;
    p.b = cfg.seg_b;
    p.mu0 = cfg.seg_mu0.normalized();
    p.lambda_mrf = cfg.seg_lambda;
    return p;
  }
  static TrackingConfig make_track_cfg(const RunConfig& cfg) {
    TrackingConfig t;
    t.h_max = cfg.track_h_max;
    t.lambda_min_thresh = cfg.track_lambda_min;
    t.lambda_photo = cfg.track_lambda_photo;
    t.sigma_intensity = cfg.track_sigma_intensity;
    t.sigma_pl = cfg.map_sigma_pl;
    t.pyramid_levels = cfg.track_pyramid_levels;
    t.random_selection = cfg.track_selection == "random";
    t.max_selected = cfg.track_max_selected;
    t.gates.mahalanobis_max = cfg.track_mahalanobis;
    t.gates.normal_cone_deg = cfg.track_normal_cone_deg;
    return t;
  }

  const RunConfig& cfg;
  SurfelMap map;
  NeighborGraph graph;
  GibbsEngine engine;
  DepthNoiseModel noise;
  TrackingConfig track_cfg;
  RandomSource base_rng;

  std::shared_mutex map_mutex;   // structure + accumulators
  std::mutex model_mutex;        // cluster list (parallel mode)
  std::mutex snapshot_mutex;
  std::shared_ptr<const MapSnapshot> snapshot = std::make_shared<MapSnapshot>();

  std::vector<int32_t> surfel_true_segment;  // by surfel id (synthetic runs)

  // Parallel-mode work feed for the graph builder.
  std::mutex graph_queue_mutex;
  std::vector<SurfelId> graph_queue;
  std::atomic<bool> stop{false};

  // Logs.
  std::mutex log_mutex;
  std::ofstream track_log, sweep_log;
  std::atomic<uint64_t> sweep_index{0};

  std::shared_ptr<const MapSnapshot> latest_snapshot() {
    std::lock_guard lock(snapshot_mutex);
    return snapshot;
  }
  void set_snapshot(std::shared_ptr<const MapSnapshot> s) {
    std::lock_guard lock(snapshot_mutex);
    snapshot = std::move(s);
  }

  void log_sweep(const SweepReport& r) {
    json row{{"sweep", r.index},        {"wall_ms", r.wall_ms},
             {"clusters", r.clusters},  {"label_change_rate", r.label_change_rate},
             {"surfels", r.surfels},    {"mean_samples_per_surfel", r.mean_samples_per_surfel}};
    std::lock_guard lock(log_mutex);
    sweep_log << row.dump() << '\n';
  }

  void log_track(double timestamp, const TrackingDiagnostics& d) {
    json row{{"timestamp", timestamp}, {"ms", d.ms},
             {"iterations", d.iterations}, {"selected", d.selected},
             {"visible", d.visible}, {"entropy", d.entropy},
             {"lambda_min", d.lambda_min}, {"lost", d.lost}};
    std::lock_guard lock(log_mutex);
    track_log << row.dump() << '\n';
  }
};

// Tracker-thread frame handling shared by both modes. `locked` selects
// whether map mutation takes the structural lock (parallel mode).
struct FrameUpdate {
  Pose pose;
  TrackingDiagnostics diag;
};

FrameUpdate track_and_update(PipelineState& st, const Frame& frame, const GroundTruth* gt,
                             const Pose& init_pose, const Vector6d& motion_prior,
                             bool first_frame, RandomSource& rng_track,
                             RandomSource& rng_extract, RandomSource& rng_labels,
                             bool locked) {
  FrameUpdate out;
  auto snapshot = st.latest_snapshot();

  if (first_frame || snapshot->surfels.empty()) {
    out.pose = init_pose;
    out.pose.covariance = 1e-6 * Matrix6d::Identity();
    out.diag.lost = false;
  } else {
    const Pose predicted = init_pose * se3_exp(motion_prior);
    const TrackResult res = incremental_icp(frame, *snapshot, predicted, st.track_cfg,
                                            st.noise, &rng_track);
    out.pose = res.pose;
    out.diag = res.diag;
    if (out.diag.lost) return out;  // no map update from lost frames
    if (out.pose.covariance.isZero(0)) out.pose.covariance = 1e-6 * Matrix6d::Identity();
  }

  // Associate and fold observations into the accumulators.
  const AssociationGates gates{st.track_cfg.gates};
  const auto assoc = associate(*snapshot, frame, out.pose, st.noise, gates,
                               out.pose.covariance);
  const Eigen::Matrix3d R = out.pose.rotation.matrix();

  std::unique_lock<std::shared_mutex> lock(st.map_mutex, std::defer_lock);
  if (locked) lock.lock();

  if (!assoc.prune.empty()) {
    // Cluster bookkeeping before the surfels disappear.
    std::lock_guard model_lock(st.model_mutex);
    for (SurfelId id : assoc.prune) {
      if (!st.map.alive(id)) continue;
      const int32_t z = hogwild_load_label(st.map.surfel(id).label);
      if (z != kUnlabeled && z < st.engine.model().cluster_count()) {
        st.engine.model().remove_from_cluster(z, hogwild_load(st.map.surfel(id).normal));
      }
    }
    st.map.remove(assoc.prune);
    st.graph.remove(st.map, assoc.prune);
  }

  for (const auto& obs : assoc.observations) {
    if (!st.map.alive(obs.id)) continue;
    Eigen::Matrix<double, 3, 6> J;
    J.leftCols<3>() = R;
    J.rightCols<3>() = -R * skew(obs.point_cam);
    const Eigen::Matrix3d cov_world = R * obs.cov_cam * R.transpose() +
                                      J * out.pose.covariance * J.transpose();
    st.map.apply_observation(obs.id, out.pose.apply(obs.point_cam),
                             R * obs.normal_cam, cov_world, obs.intensity, obs.grad_mag);
  }

  // Seed new surfels on uncovered pixels, biased to high gradients.
  const auto seeds = extract_new_surfels(frame, out.pose, *snapshot, st.cfg.frontend_budget,
                                         st.cfg.frontend_grad_floor, rng_extract);
  std::vector<SurfelId> fresh;
  for (const auto& px : seeds) {
    const auto seed = make_surfel_seed(frame, out.pose, px, st.noise, out.pose.covariance);
    if (!seed) continue;
    const SurfelId id = st.map.add(*seed);
    fresh.push_back(id);
    if (gt && !gt->segment.empty()) {
      st.surfel_true_segment.resize(st.map.slot_count(), -1);
      st.surfel_true_segment[id] = gt->segment[px.y() * frame.depth.width + px.x()];
    }
  }
  if (locked) {
    std::lock_guard q(st.graph_queue_mutex);
    st.graph_queue.insert(st.graph_queue.end(), fresh.begin(), fresh.end());
  } else {
    for (SurfelId id : fresh) st.graph.add_surfel(st.map, id);
  }
  {
    std::lock_guard model_lock(st.model_mutex);
    for (SurfelId id : fresh) {
      st.engine.assign_initial_label(st.map, st.graph, id, rng_labels);
    }
  }
  return out;
}

void write_outputs(PipelineState& st, const std::string& out_dir, const Trajectory& traj) {
  auto atomic_write = [&](const std::string& name, auto&& writer) {
    const std::string tmp = out_dir + "/." + name + ".tmp";
    writer(tmp);
    fs::rename(tmp, out_dir + "/" + name);
  };
  atomic_write("trajectory.txt",
               [&](const std::string& p) { write_trajectory_tum(p, traj); });
  const auto snap = st.map.publish(st.cfg.gibbs_min_samples);
  atomic_write("map.ply", [&](const std::string& p) { write_surfel_ply(p, *snap); });
  atomic_write("surfel_stats.csv",
               [&](const std::string& p) { write_surfel_csv(p, *snap); });
  if (!st.surfel_true_segment.empty()) {
    atomic_write("surfel_gt.csv", [&](const std::string& p) {
      std::ofstream out(p);
      out << "row,surfel_id,true_segment\n";
      size_t row = 0;
      for (const auto& s : snap->surfels) {
        const int32_t seg =
            s.id < st.surfel_true_segment.size() ? st.surfel_true_segment[s.id] : -1;
        out << row++ << ',' << s.id << ',' << seg << '\n';
      }
    });
  }
}

}  // namespace

std::unique_ptr<FrameSource> open_frame_source(const RunConfig& cfg) {
  if (!cfg.input_tum.empty()) return std::make_unique<TumSource>(cfg);
  if (!cfg.input_scene.empty()) {
    if (cfg.input_trajectory.empty()) {
      throw std::runtime_error("synthetic input needs input.trajectory");
    }
    return std::make_unique<SyntheticSource>(cfg);
  }
  throw std::runtime_error("config must set input.tum or input.scene");
}

Trajectory make_orbit_trajectory(const Eigen::Vector3d& target, double radius,
                                 const Eigen::Vector3d& up, int frames,
                                 double deg_per_frame, double dt, double tilt) {
  Trajectory traj;
  const Eigen::Vector3d u = up.normalized();
  Eigen::Vector3d a = u.cross(Eigen::Vector3d::UnitX());
  if (a.norm() < 1e-6) a = u.cross(Eigen::Vector3d::UnitY());
  a.normalize();
  const Eigen::Vector3d b = u.cross(a);
  for (int i = 0; i < frames; ++i) {
    const double ang = i * deg_per_frame * M_PI / 180.0;
    const Eigen::Vector3d eye = target +
                                radius * std::cos(ang) * a + radius * std::sin(ang) * b -
                                radius * tilt * u;
    TimedPose tp;
    tp.timestamp = i * dt;
    tp.pose = pose_look_at(eye, target, u);
    traj.push_back(tp);
  }
  return traj;
}

RunSummary run_slam(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto source = open_frame_source(cfg);

  PipelineState st(cfg);
  st.track_log.open(out_dir + "/track_diag.jsonl");
  st.sweep_log.open(out_dir + "/sweeps.jsonl");

  RandomSource rng_track = st.base_rng.fork(1);
  RandomSource rng_extract = st.base_rng.fork(2);
  RandomSource rng_labels = st.base_rng.fork(3);
  RandomSource rng_sampler = st.base_rng.fork(4);
  RandomSource rng_graph = st.base_rng.fork(5);

  Trajectory trajectory;
  std::vector<double> track_ms;
  RunSummary summary;

  Pose pose;  // world = first camera frame unless tracking says otherwise
  Vector6d motion = Vector6d::Zero();
  int consecutive_lost = 0;
  const bool parallel = cfg.run_mode == "parallel";

  // Parallel mode: prefetch + graph builder + three sampler groups; the
  // tracker runs on this thread. Sequential mode interleaves sweeps instead.
  std::vector<std::thread> workers;
  std::mutex prefetch_mutex;
  std::condition_variable prefetch_cv;
  struct Prefetched {
    size_t index;
    Frame frame;
    GroundTruth gt;
  };
  std::vector<Prefetched> prefetch_queue;

  if (parallel) {
    workers.emplace_back([&] {  // prefetch
      for (size_t i = 0; i < source->size() && !st.stop.load(); ++i) {
        Prefetched p;
        p.index = i;
        p.frame = source->next_frame(i, &p.gt);
        std::unique_lock lock(prefetch_mutex);
        prefetch_cv.wait(lock, [&] { return prefetch_queue.size() < 2 || st.stop.load(); });
        if (st.stop.load()) return;
        prefetch_queue.push_back(std::move(p));
        prefetch_cv.notify_all();
      }
    });
    workers.emplace_back([&] {  // graph builder
      RandomSource rng = st.base_rng.fork(6);
      while (!st.stop.load()) {
        std::vector<SurfelId> fresh;
        {
          std::lock_guard q(st.graph_queue_mutex);
          fresh.swap(st.graph_queue);
        }
        std::shared_lock lock(st.map_mutex);
        for (SurfelId id : fresh) st.graph.add_surfel(st.map, id);
        st.graph.revisit(st.map, cfg.map_revisit_per_frame / 4 + 1, rng);
        lock.unlock();
        if (fresh.empty()) std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
    });
    // Sampler group 1: normals + cluster parameters.
    workers.emplace_back([&] {
      RandomSource rng = st.base_rng.fork(7);
      while (!st.stop.load()) {
        {
          std::shared_lock lock(st.map_mutex);
          for (SurfelId id = 0; id < st.map.slot_count(); ++id) {
            if (st.map.alive(id)) st.engine.sample_normal(st.map, st.graph, id, rng);
          }
        }
        {
          std::unique_lock lock(st.map_mutex);
          std::lock_guard model_lock(st.model_mutex);
          st.engine.reconcile_counts(st.map);
          st.engine.resample_cluster_params(st.map, rng);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
      }
    });
    // Sampler group 2: labels (Hogwild reads of neighbor labels).
    workers.emplace_back([&] {
      RandomSource rng = st.base_rng.fork(8);
      while (!st.stop.load()) {
        size_t changed = 0, count = 0;
        {
          std::shared_lock lock(st.map_mutex);
          std::lock_guard model_lock(st.model_mutex);
          for (SurfelId id = 0; id < st.map.slot_count(); ++id) {
            if (!st.map.alive(id)) continue;
            changed += st.engine.sample_label(st.map, st.graph, id, rng);
            ++count;
          }
        }
        if (count == 0) std::this_thread::sleep_for(std::chrono::milliseconds(1));
      }
    });
    // Sampler group 3: locations; owns sweep ages and the sweep log.
    workers.emplace_back([&] {
      RandomSource rng = st.base_rng.fork(9);
      while (!st.stop.load()) {
        const auto t0 = std::chrono::steady_clock::now();
        size_t count = 0;
        uint64_t samples = 0;
        {
          std::shared_lock lock(st.map_mutex);
          for (SurfelId id = 0; id < st.map.slot_count(); ++id) {
            if (!st.map.alive(id)) continue;
            st.engine.sample_location(st.map, st.graph, id, rng);
            Surfel& s = st.map.surfel(id);
            ++s.sweep_age;
            samples += s.sample_count;
            ++count;
          }
        }
        if (count == 0) {
          std::this_thread::sleep_for(std::chrono::milliseconds(1));
          continue;
        }
        SweepReport r;
        r.index = st.sweep_index++;
        r.surfels = count;
        r.mean_samples_per_surfel = static_cast<double>(samples) / count;
        {
          std::lock_guard model_lock(st.model_mutex);
          r.clusters = st.engine.model().cluster_count();
        }
        r.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        st.log_sweep(r);
      }
    });
  }

  for (size_t i = 0; i < source->size(); ++i) {
    Frame frame;
    GroundTruth gt;
    if (parallel) {
      std::unique_lock lock(prefetch_mutex);
      prefetch_cv.wait(lock, [&] { return !prefetch_queue.empty(); });
      frame = std::move(prefetch_queue.front().frame);
      gt = std::move(prefetch_queue.front().gt);
      prefetch_queue.erase(prefetch_queue.begin());
      prefetch_cv.notify_all();
    } else {
      frame = source->next_frame(i, &gt);
    }

    const Pose prev = pose;
    const FrameUpdate up =
        track_and_update(st, frame, source->has_segment_truth() ? &gt : nullptr, pose,
                         motion, i == 0, rng_track, rng_extract, rng_labels, parallel);
    st.log_track(frame.timestamp, up.diag);
    track_ms.push_back(up.diag.ms);

    if (up.diag.lost) {
      ++consecutive_lost;
      pose = prev * se3_exp(motion);  // coast on the motion prior
      trajectory.push_back({frame.timestamp, pose});
      if (consecutive_lost > 10) {
        summary.aborted_lost = true;
        break;
      }
      continue;
    }
    consecutive_lost = 0;
    pose = up.pose;
    if (i > 0) motion = se3_log(prev.inverse() * pose);
    trajectory.push_back({frame.timestamp, pose});

    if (!parallel) {
      for (int sweep = 0; sweep < cfg.gibbs_sweeps_per_frame; ++sweep) {
        SweepReport r = st.engine.run_sweep(st.map, st.graph, rng_sampler);
        r.index = st.sweep_index++;
        st.log_sweep(r);
      }
      st.graph.revisit(st.map, cfg.map_revisit_per_frame, rng_graph);
      st.set_snapshot(st.map.publish(cfg.gibbs_min_samples));
    } else {
      std::unique_lock lock(st.map_mutex);
      st.set_snapshot(st.map.publish(cfg.gibbs_min_samples));
    }
    ++summary.frames;
  }

  st.stop.store(true);
  prefetch_cv.notify_all();
  for (auto& w : workers) w.join();

  write_outputs(st, out_dir, trajectory);

  summary.surfels = st.map.alive_count();
  summary.clusters = st.engine.model().cluster_count();
  if (!track_ms.empty()) {
    std::vector<double> ms(track_ms.begin() + (track_ms.size() > 1 ? 1 : 0), track_ms.end());
    std::sort(ms.begin(), ms.end());
    summary.tracking_ms_median = ms[ms.size() / 2];
  }

  // Self-evaluation against the source's ground truth when available.
  const Trajectory* gt_traj = nullptr;
  if (auto* tum = dynamic_cast<TumSource*>(source.get());
      tum && !tum->ground_truth().empty()) {
    gt_traj = &tum->ground_truth();
  } else if (auto* syn = dynamic_cast<SyntheticSource*>(source.get())) {
    gt_traj = &syn->ground_truth();
  }
  if (gt_traj && trajectory.size() >= 2) {
    summary.ate_rmse = evaluate_ate(trajectory, *gt_traj).rmse;
  }
  return summary;
}

}  // namespace dirslam
