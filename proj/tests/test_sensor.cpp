#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <algorithm>
#include <filesystem>
#include <fstream>

#include "dirslam/association.h"
#include "dirslam/normal_estimation.h"
#include "dirslam/plane_sparsity.h"
#include "dirslam/png_io.h"
#include "dirslam/synthetic.h"
#include "dirslam/tum_io.h"
#include "fixtures.h"

using namespace dirslam;

namespace {

Intrinsics small_cam() {
  Intrinsics K;
  K.width = 160;
  K.height = 120;
  K.fx = K.fy = 131.25;
  K.cx = 79.5;
  K.cy = 59.5;
  return K;
}

}  // namespace

TEST_CASE("projection/back-projection round trip") {
  Intrinsics K;  // defaults: 640x480, f=525
  for (double v = 0; v <= K.height - 1; v += 17.3) {
    for (double u = 0; u <= K.width - 1; u += 23.7) {
      const Eigen::Vector3d p = K.backproject(u, v, 2.37);
      const Eigen::Vector2d uv = K.project(p);
      CHECK(std::abs(uv.x() - u) < 1e-9);
      CHECK(std::abs(uv.y() - v) < 1e-9);
    }
  }
  CHECK(K.project(Eigen::Vector3d(0, 0, 1)).isApprox(Eigen::Vector2d(319.5, 239.5), 1e-12));
}

TEST_CASE("depth noise model anchor values") {
  DepthNoiseModel m;
  CHECK(m.axial_sigma(0.4) == doctest::Approx(0.0012).epsilon(1e-12));
  CHECK(m.axial_sigma(1.4) == doctest::Approx(0.0031).epsilon(1e-12));

  // On-axis ray: eigenvalues are exactly {sigma_z^2, sigma_xy^2, sigma_xy^2},
  // with the axial variance along the ray (z axis here).
  Intrinsics K;
  const double z = 1.0;
  const Eigen::Matrix3d cov = m.covariance(K, K.cx, K.cy, z);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const double sz2 = m.axial_sigma(z) * m.axial_sigma(z);
  const double sxy2 = m.lateral_sigma(z, K.fx) * m.lateral_sigma(z, K.fx);
  std::vector<double> expected = {sz2, sxy2, sxy2};
  std::sort(expected.begin(), expected.end());
  for (int i = 0; i < 3; ++i) {
    CHECK(es.eigenvalues()[i] == doctest::Approx(expected[i]).epsilon(1e-9));
  }
  CHECK(cov(2, 2) == doctest::Approx(sz2).epsilon(1e-9));
}

TEST_CASE("normal estimation on synthetic planes") {
  const Intrinsics K = small_cam();
  DepthNoiseModel noise;
  RandomSource rng(1);

  // Frontal wall at z = 2.
  const Frame wall = render_synthetic(make_wall_scene(2.0), Pose{}, K, 0, false, noise,
                                      nullptr, nullptr);
  const auto n = estimate_normal(wall, K.width / 2, K.height / 2);
  REQUIRE(n.has_value());
  CHECK((*n - Eigen::Vector3d(0, 0, -1)).norm() < 1e-6);

  // 45-degree inclined plane.
  SyntheticScene inclined;
  inclined.add_plane({0, 0, 2}, Eigen::Vector3d(0, -1, -1).normalized(), 4, 4, 0, 0);
  GroundTruth gt;
  const Frame f45 = render_synthetic(inclined, Pose{}, K, 0, false, noise, nullptr, &gt);
  const auto n45 = estimate_normal(f45, K.width / 2, K.height / 2);
  REQUIRE(n45.has_value());
  const Eigen::Vector3f truth = gt.normal_cam[(K.height / 2) * K.width + K.width / 2];
  const double angle = std::acos(std::clamp(double(n45->dot(truth.cast<double>())), -1.0, 1.0));
  CHECK(angle < 0.5 * M_PI / 180.0);
}

TEST_CASE("normal estimation across a depth discontinuity") {
  const Intrinsics K = small_cam();
  DepthNoiseModel noise;
  // Near wall covering the left half of the view, far wall behind. The near
  // patch's v_axis is +x, so extent_v = 1 about x = -1 ends the patch at x=0.
  SyntheticScene scene;
  scene.add_plane({-1.0, 0, 1.0}, {0, 0, -1}, 2.0, 1.0, 0, 0);
  scene.add_plane({0, 0, 2.5}, {0, 0, -1}, 6.0, 6.0, 0, 1);
  GroundTruth gt;
  const Frame frame = render_synthetic(scene, Pose{}, K, 0, false, noise, nullptr, &gt);

  // Find the column where the jump happens and probe right at it.
  const int v = K.height / 2;
  int edge = -1;
  for (int u = 1; u < K.width; ++u) {
    if (std::abs(frame.depth.at(u, v) - frame.depth.at(u - 1, v)) > 0.5f) edge = u;
  }
  REQUIRE(edge > 0);
  for (int du = -1; du <= 1; ++du) {
    const auto n = estimate_normal(frame, edge + du, v);
    if (!n) continue;  // invalid is acceptable at the jump
    const double angle = std::acos(std::clamp(-n->z(), -1.0, 1.0));
    CHECK(angle < 20.0 * M_PI / 180.0);  // both surfaces share the -z normal here
  }
}

TEST_CASE("normal estimation is equivariant under rigid motion") {
  const Intrinsics K = small_cam();
  DepthNoiseModel noise;
  SyntheticScene scene;
  scene.add_plane({0.3, -0.2, 1.8}, Eigen::Vector3d(0.3, 0.2, -1).normalized(), 3, 3, 0, 0);

  const Pose pa;  // identity
  Pose pb = se3_exp((Vector6d() << 0.05, -0.02, 0.03, 0.04, -0.03, 0.05).finished());
  const Frame fa = render_synthetic(scene, pa, K, 0, false, noise, nullptr, nullptr);
  const Frame fb = render_synthetic(scene, pb, K, 0, false, noise, nullptr, nullptr);
  const auto na = estimate_normal(fa, K.width / 2, K.height / 2);
  // The same world direction seen from pose b, mapped back through b's rotation.
  const auto nb = estimate_normal(fb, K.width / 2, K.height / 2);
  REQUIRE(na.has_value());
  REQUIRE(nb.has_value());
  const Eigen::Vector3d na_world = pa.rotation * (*na);
  const Eigen::Vector3d nb_world = pb.rotation * (*nb);
  CHECK((na_world - nb_world).norm() < 1e-6);
}

TEST_CASE("renderer: wall depth, noise statistics, reprojected view") {
  const Intrinsics K = small_cam();
  DepthNoiseModel noise;
  const SyntheticScene wall = make_wall_scene(2.0, 0);

  const Frame clean = render_synthetic(wall, Pose{}, K, 0, false, noise, nullptr, nullptr);
  for (int v = 0; v < K.height; v += 7) {
    for (int u = 0; u < K.width; u += 7) {
      CHECK(clean.depth.at(u, v) == doctest::Approx(2.0).epsilon(1e-6));
    }
  }

  RandomSource rng(33);
  const Frame noisy = render_synthetic(wall, Pose{}, K, 0, true, noise, &rng, nullptr);
  double sq = 0;
  int n = 0;
  for (size_t i = 0; i < noisy.depth.data.size(); ++i) {
    if (noisy.depth.data[i] > 0) {
      const double r = noisy.depth.data[i] - clean.depth.data[i];
      sq += r * r;
      ++n;
    }
  }
  const double std_meas = std::sqrt(sq / n);
  CHECK(std_meas == doctest::Approx(noise.axial_sigma(2.0)).epsilon(0.1));

  // Translated camera: depth image equals the analytic plane intersection.
  Pose moved;
  moved.translation = {0.1, 0, 0};
  const Frame shifted = render_synthetic(wall, moved, K, 0, false, noise, nullptr, nullptr);
  for (int v = 3; v < K.height; v += 13) {
    for (int u = 3; u < K.width; u += 13) {
      // Ray origin (0.1,0,0), direction K.ray: z stays the hit distance along z.
      CHECK(shifted.depth.at(u, v) == doctest::Approx(2.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("scene files round trip") {
  SyntheticScene scene = make_room_scene();
  const std::string path = "/tmp/dirslam_test_scene.txt";
  scene.save(path);
  const SyntheticScene back = SyntheticScene::load(path);
  REQUIRE(back.patches.size() == scene.patches.size());
  for (size_t i = 0; i < scene.patches.size(); ++i) {
    CHECK(back.patches[i].origin.isApprox(scene.patches[i].origin, 1e-9));
    CHECK(back.patches[i].normal.isApprox(scene.patches[i].normal, 1e-9));
    CHECK(back.patches[i].segment == scene.patches[i].segment);
    CHECK(back.patches[i].texture == scene.patches[i].texture);
  }
}

TEST_CASE("association: anchors, exclusion, and synthetic correspondence") {
  const Intrinsics K = small_cam();
  DepthNoiseModel noise;
  RandomSource rng(5);
  const SyntheticScene corner = make_corner_scene(2.0);
  const Pose cam = pose_look_at({0.35, 0.3, 0.32}, {2, 2, 2}, {0, 0, 1});
  auto rm = testsup::build_map_from_render(corner, cam, K, 6, false, rng);

  // A surfel behind the camera yields no observation.
  {
    SurfelMap behind_map;
    NewSurfel s;
    s.position_world = cam.translation - (cam.rotation * Eigen::Vector3d(0, 0, 1));
    s.normal_world = {0, 0, 1};
    s.cov_world = 1e-4 * Eigen::Matrix3d::Identity();
    behind_map.add(s);
    GroundTruth gt;
    const Frame f = render_synthetic(corner, cam, K, 0, false, noise, nullptr, &gt);
    const auto res = associate(*behind_map.publish(10), f, cam, noise, {});
    CHECK(res.observations.empty());
    CHECK(res.visible == 0);
  }

  // Same-frame association: nearly every visible surfel re-associates with
  // its own generating surface.
  GroundTruth gt;
  const Frame frame = render_synthetic(corner, cam, K, 0, false, noise, nullptr, &gt);
  const auto res = associate(*rm.snapshot, frame, cam, noise, {});
  CHECK(res.prune.empty());
  REQUIRE(res.observations.size() > 100);
  size_t correct = 0;
  for (const auto& obs : res.observations) {
    const int32_t seg = gt.segment[obs.pixel.y() * K.width + obs.pixel.x()];
    correct += seg == rm.map.surfel(obs.id).label;
  }
  CHECK(static_cast<double>(correct) / res.observations.size() >= 0.95);
  CHECK(static_cast<double>(res.observations.size()) / rm.snapshot->surfels.size() >= 0.95);
}

TEST_CASE("association prunes back-facing and occluded surfels") {
  const Intrinsics K = small_cam();
  DepthNoiseModel noise;
  SurfelMap map;

  // Back-facing: normal pointing away from the camera.
  NewSurfel s;
  s.position_world = {0, 0, 2};
  s.normal_world = {0, 0, 1};  // away from a camera at the origin
  s.cov_world = 1e-4 * Eigen::Matrix3d::Identity();
  const SurfelId back_id = map.add(s);

  // Occluded: surfel 0.5 m behind a rendered wall at z = 1.5.
  s.position_world = {0.1, 0, 2.0};
  s.normal_world = {0, 0, -1};
  const SurfelId occ_id = map.add(s);

  const Frame frame = render_synthetic(make_wall_scene(1.5), Pose{}, K, 0, false, noise,
                                       nullptr, nullptr);
  const auto res = associate(*map.publish(10), frame, Pose{}, noise, {});
  CHECK(std::count(res.prune.begin(), res.prune.end(), back_id) == 1);
  CHECK(std::count(res.prune.begin(), res.prune.end(), occ_id) == 1);
  CHECK(res.observations.empty());
}

TEST_CASE("new-surfel extraction: coverage, uniform fallback, gradient bias") {
  const Intrinsics K = small_cam();
  DepthNoiseModel noise;
  RandomSource rng(17);
  const SyntheticScene wall = make_wall_scene(2.0, 1);  // checkerboard
  const Frame frame = render_synthetic(wall, Pose{}, K, 0, false, noise, nullptr, nullptr);

  // Dense map seeded at every pixel: everything is covered, no seeds.
  SurfelMap dense;
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      const auto seed = make_surfel_seed(frame, Pose{}, {u, v}, noise);
      if (seed) dense.add(*seed);
    }
  }
  CHECK(extract_new_surfels(frame, Pose{}, *dense.publish(10), 100, 0.05, rng).empty());

  // Empty map + uniform texture: seeds land roughly uniformly.
  const Frame flat = render_synthetic(make_wall_scene(2.0, 0), Pose{}, K, 0, false, noise,
                                      nullptr, nullptr);
  MapSnapshot empty;
  const auto uniform_seeds = extract_new_surfels(flat, Pose{}, empty, 400, 0.05, rng);
  REQUIRE(uniform_seeds.size() == 400);
  size_t left = 0;
  for (const auto& px : uniform_seeds) left += px.x() < K.width / 2;
  CHECK(static_cast<double>(left) / uniform_seeds.size() > 0.35);
  CHECK(static_cast<double>(left) / uniform_seeds.size() < 0.65);

  // Checkerboard: most seeds hug intensity edges.
  const auto seeds = extract_new_surfels(frame, Pose{}, empty, 300, 0.05, rng);
  REQUIRE(seeds.size() == 300);
  float max_grad = 0;
  for (float g : frame.grad_mag.data) max_grad = std::max(max_grad, g);
  size_t near_edge = 0;
  for (const auto& px : seeds) {
    bool found = false;
    for (int dy = -2; dy <= 2 && !found; ++dy) {
      for (int dx = -2; dx <= 2 && !found; ++dx) {
        const int x = px.x() + dx, y = px.y() + dy;
        if (x < 0 || y < 0 || x >= K.width || y >= K.height) continue;
        found = frame.grad_mag.at(x, y) > 0.25f * max_grad;
      }
    }
    near_edge += found;
  }
  CHECK(static_cast<double>(near_edge) / seeds.size() >= 0.7);
}

TEST_CASE("surfel seeds: pinhole position and pixel-footprint radius") {
  const Intrinsics K = small_cam();
  DepthNoiseModel noise;
  const Frame frame = render_synthetic(make_wall_scene(1.0, 0), Pose{}, K, 0, false,
                                       noise, nullptr, nullptr);
  // Image-center pixel at depth 1 m, identity pose.
  const int cu = static_cast<int>(K.cx + 0.5), cv = static_cast<int>(K.cy + 0.5);
  const auto seed = make_surfel_seed(frame, Pose{}, {cu, cv}, noise);
  REQUIRE(seed.has_value());
  CHECK((seed->position_world - K.backproject(cu, cv, 1.0)).norm() < 1e-6);
  CHECK(seed->position_world.z() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(seed->radius == doctest::Approx(std::sqrt(2.0) * 1.0 / K.fx).epsilon(1e-9));
  CHECK(seed->normal_world.isApprox(Eigen::Vector3d(0, 0, -1), 1e-5));
}

TEST_CASE("png 16-bit round trip") {
  Image16 img;
  img.width = 64;
  img.height = 48;
  img.data.resize(64 * 48);
  RandomSource rng(3);
  for (auto& v : img.data) v = static_cast<uint16_t>(rng.uniform_int(65536));
  write_png16("/tmp/dirslam_depth16.png", img);
  const Image16 back = read_png16("/tmp/dirslam_depth16.png");
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  CHECK(back.data == img.data);
}

TEST_CASE("tum sequence writing and parsing are lossless") {
  namespace fs = std::filesystem;
  const std::string dir = "/tmp/dirslam_tum_fixture";
  fs::remove_all(dir);
  fs::create_directories(dir + "/rgb");
  fs::create_directories(dir + "/depth");

  const Intrinsics K = small_cam();
  DepthNoiseModel noise;
  const SyntheticScene scene = make_corner_scene(2.0);
  const Pose cam = pose_look_at({0.4, 0.4, 0.4}, {2, 2, 2}, {0, 0, 1});

  std::ofstream rgb_idx(dir + "/rgb.txt"), depth_idx(dir + "/depth.txt");
  Trajectory gt_traj;
  std::vector<Frame> originals;
  for (int i = 0; i < 3; ++i) {
    // rgb timestamps offset by 10 ms: still associated (within 0.02 s).
    Frame f = render_synthetic(scene, cam, K, 100.0 + 0.1 * i, false, noise, nullptr, nullptr);
    originals.push_back(f);
    std::string rl, dl;
    write_tum_frame(dir, f, rl, dl);
    const double t_rgb = f.timestamp + 0.01;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.6f %s", t_rgb, rl.substr(rl.find(' ') + 1).c_str());
    rgb_idx << buf;
    depth_idx << dl;
    gt_traj.push_back({f.timestamp, cam});
  }
  rgb_idx.close();
  depth_idx.close();
  write_trajectory_tum(dir + "/groundtruth.txt", gt_traj);

  const TumSequence seq = TumSequence::open(dir, K);
  REQUIRE(seq.size() == 3);
  CHECK(seq.has_ground_truth());
  for (size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq.timestamp(i) == doctest::Approx(100.0 + 0.1 * i).epsilon(1e-9));
    const Frame f = seq.load_frame(i);
    REQUIRE(f.depth.data.size() == originals[i].depth.data.size());
    for (size_t k = 0; k < f.depth.data.size(); ++k) {
      // Depth round-trips at the 1/5000 m quantization.
      const double expected =
          std::round(originals[i].depth.data[k] * kTumDepthScale) / kTumDepthScale;
      CHECK(std::abs(f.depth.data[k] - expected) < 1e-6);
    }
  }
  // Depth value 5000 decodes to exactly one meter.
  CHECK(5000 / kTumDepthScale == 1.0);
  // Identity quaternion parses to the identity rotation.
  const auto& gt = seq.ground_truth();
  REQUIRE(gt.size() == 3);

  // An rgb frame offset beyond the window is skipped.
  {
    std::ofstream bad(dir + "/rgb.txt", std::ios::app);
    bad << "200.0 rgb/missing.png\n";
  }
  std::ofstream depth_app(dir + "/depth.txt", std::ios::app);
  depth_app << "200.5 depth/missing.png\n";
  depth_app.close();
  const TumSequence seq2 = TumSequence::open(dir, K);
  CHECK(seq2.size() == 3);
}

TEST_CASE("trajectory file identity quaternion and round trip") {
  Trajectory traj;
  TimedPose tp;
  tp.timestamp = 1.5;
  tp.pose.rotation = Rotation3(Eigen::Quaterniond(1, 0, 0, 0));
  tp.pose.translation = {1, 2, 3};
  traj.push_back(tp);
  write_trajectory_tum("/tmp/dirslam_traj.txt", traj);
  const Trajectory back = read_trajectory_tum("/tmp/dirslam_traj.txt");
  REQUIRE(back.size() == 1);
  CHECK(back[0].pose.rotation.matrix().isApprox(Eigen::Matrix3d::Identity(), 1e-12));
  CHECK(back[0].pose.translation.isApprox(Eigen::Vector3d(1, 2, 3), 1e-9));
}

TEST_CASE("plane sparsity: single plane, monotonicity, ten-plane room") {
  RandomSource rng(9);

  // Cloud entirely on one plane: a single plane explains everything.
  SyntheticScene one;
  one.add_plane({0, 0, 1}, {0, 0, -1}, 2, 2, 0, 0);
  const auto cloud1 = one.sample_surface(500, rng);
  const auto curve1 = plane_sparsity_experiment(cloud1, {1}, 0.02, 30.0, 5, rng);
  CHECK(curve1[0].mean_inlier_fraction == doctest::Approx(1.0).epsilon(1e-9));

  // Ten-plane room: mean curve non-decreasing in plane count.
  const SyntheticScene room = make_room_scene();
  const auto cloud = room.sample_surface(2000, rng);
  const auto curve =
      plane_sparsity_experiment(cloud, {1, 2, 3, 5, 7, 10, 15}, 0.02, 30.0, 20, rng);
  for (size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].mean_inlier_fraction >= curve[i - 1].mean_inlier_fraction - 0.02);
  }

  // Constructed set: one plane per surface explains (almost) every point.
  std::vector<int> per_face(room.segment_count(), -1);
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (per_face[cloud[i].segment] < 0) per_face[cloud[i].segment] = static_cast<int>(i);
  }
  std::vector<int> picks;
  for (int i : per_face) {
    if (i >= 0) picks.push_back(i);
  }
  REQUIRE(picks.size() == 10);
  CHECK(inlier_fraction_for_planes(cloud, picks, 0.02, 30.0) >= 0.9);
}
