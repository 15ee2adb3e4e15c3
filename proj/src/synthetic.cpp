#include "dirslam/synthetic.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dirslam {

namespace {

Eigen::Vector3d any_tangent(const Eigen::Vector3d& n) {
  const Eigen::Vector3d a =
      std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  return a.cross(n).normalized();
}

}  // namespace

void SyntheticScene::add_plane(const Eigen::Vector3d& origin, const Eigen::Vector3d& normal,
                               double extent_u, double extent_v, int texture, int segment) {
  PlanePatch p;
  p.origin = origin;
  p.normal = normal.normalized();
  p.u_axis = any_tangent(p.normal);
  p.extent_u = extent_u;
  p.extent_v = extent_v;
  p.texture = texture;
  p.segment = segment;
  patches.push_back(p);
}

void SyntheticScene::add_box(const Eigen::Vector3d& c, const Eigen::Vector3d& h,
                             int texture, int segment_base) {
  const Eigen::Vector3d axes[3] = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                   Eigen::Vector3d::UnitZ()};
  int face = 0;
  for (int i = 0; i < 3; ++i) {
    for (double sign : {1.0, -1.0}) {
      const Eigen::Vector3d n = sign * axes[i];
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      add_plane(c + n * h[i], n, h[j], h[k], texture, segment_base + face);
      ++face;
    }
  }
}

int SyntheticScene::segment_count() const {
  int m = 0;
  for (const auto& p : patches) m = std::max(m, p.segment + 1);
  return m;
}

double SyntheticScene::total_area() const {
  double a = 0;
  for (const auto& p : patches) a += 4.0 * p.extent_u * p.extent_v;
  return a;
}

std::vector<SurfacePoint> SyntheticScene::sample_surface(int n, RandomSource& rng) const {
  std::vector<double> cum;
  double a = 0;
  for (const auto& p : patches) cum.push_back(a += 4.0 * p.extent_u * p.extent_v);
  std::vector<SurfacePoint> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double r = rng.uniform() * a;
    size_t k = std::lower_bound(cum.begin(), cum.end(), r) - cum.begin();
    k = std::min(k, patches.size() - 1);
    const auto& p = patches[k];
    const double ua = (2.0 * rng.uniform() - 1.0) * p.extent_u;
    const double vb = (2.0 * rng.uniform() - 1.0) * p.extent_v;
    out.push_back({p.origin + ua * p.u_axis + vb * p.v_axis(), p.normal, p.segment});
  }
  return out;
}

SyntheticScene SyntheticScene::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  SyntheticScene scene;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "plane") {
      Eigen::Vector3d o, n;
      double eu, ev;
      int tex, seg;
      ss >> o.x() >> o.y() >> o.z() >> n.x() >> n.y() >> n.z() >> eu >> ev >> tex >> seg;
      if (!ss) throw std::runtime_error("malformed plane line: " + line);
      scene.add_plane(o, n, eu, ev, tex, seg);
    } else if (kind == "box") {
      Eigen::Vector3d c, h;
      int tex, seg;
      ss >> c.x() >> c.y() >> c.z() >> h.x() >> h.y() >> h.z() >> tex >> seg;
      if (!ss) throw std::runtime_error("malformed box line: " + line);
      scene.add_box(c, h, tex, seg);
    } else {
      throw std::runtime_error("unknown scene entity: " + kind);
    }
  }
  return scene;
}

void SyntheticScene::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file: " + path);
  out << "# synthetic scene: plane ox oy oz nx ny nz eu ev texture segment\n";
  char buf[256];
  for (const auto& p : patches) {
    std::snprintf(buf, sizeof(buf), "plane %.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g %d %d\n",
                  p.origin.x(), p.origin.y(), p.origin.z(), p.normal.x(), p.normal.y(),
                  p.normal.z(), p.extent_u, p.extent_v, p.texture, p.segment);
    out << buf;
  }
}

double texture_intensity(int texture, double a, double b) {
  switch (texture) {
    case 1: {  // strong checkerboard, 8 cm cells
      const int ca = static_cast<int>(std::floor(a / 0.08));
      const int cb = static_cast<int>(std::floor(b / 0.08));
      return ((ca + cb) & 1) ? 0.85 : 0.25;
    }
    case 2:  // smooth sinusoidal texture
      return 0.5 + 0.2 * std::sin(2.0 * M_PI * a / 0.23) * std::sin(2.0 * M_PI * b / 0.31) +
             0.1 * std::sin(2.0 * M_PI * (a + b) / 0.57);
    case 3: {  // weak checkerboard, 16 cm cells
      const int ca = static_cast<int>(std::floor(a / 0.16));
      const int cb = static_cast<int>(std::floor(b / 0.16));
      return ((ca + cb) & 1) ? 0.55 : 0.48;
    }
    case 4:  // ramp
      return 0.3 + 0.4 * (0.5 + 0.5 * std::sin(2.0 * M_PI * a / 1.7));
    case 5: {  // dot grid: strong gradients on a small fraction of the surface
      const double ca = a - 0.12 * std::round(a / 0.12);
      const double cb = b - 0.12 * std::round(b / 0.12);
      const auto ia = static_cast<long>(std::round(a / 0.12));
      const auto ib = static_cast<long>(std::round(b / 0.12));
      if (ca * ca + cb * cb < 0.015 * 0.015) return ((ia + ib) & 1) ? 0.95 : 0.1;
      return 0.5;
    }
    default:
      return 0.55;
  }
}

Frame render_synthetic(const SyntheticScene& scene, const Pose& cam_to_world,
                       const Intrinsics& K, double timestamp, bool noise,
                       const DepthNoiseModel& noise_model, RandomSource* rng,
                       GroundTruth* gt) {
  Frame frame;
  frame.timestamp = timestamp;
  frame.intrinsics = K;
  frame.intensity = ImageF(K.width, K.height, 0.f);
  frame.depth = ImageF(K.width, K.height, 0.f);
  frame.rgb.assign(K.width * K.height, {0, 0, 0});
  if (gt) {
    gt->width = K.width;
    gt->height = K.height;
    gt->segment.assign(K.width * K.height, -1);
    gt->normal_cam.assign(K.width * K.height, Eigen::Vector3f::Zero());
    gt->true_depth = ImageF(K.width, K.height, 0.f);
  }

  const Eigen::Matrix3d R = cam_to_world.rotation.matrix();
  const Eigen::Vector3d cam = cam_to_world.translation;

  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const Eigen::Vector3d dir_cam = K.ray(x, y);
      const Eigen::Vector3d dir = R * dir_cam;
      double best_t = 1e30;
      const PlanePatch* hit = nullptr;
      double hit_a = 0, hit_b = 0;
      for (const auto& p : scene.patches) {
        const double denom = p.normal.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double t = p.normal.dot(p.origin - cam) / denom;
        if (t <= 1e-6 || t >= best_t) continue;
        const Eigen::Vector3d q = cam + t * dir - p.origin;
        const double a = q.dot(p.u_axis);
        const double b = q.dot(p.v_axis());
        if (std::abs(a) > p.extent_u || std::abs(b) > p.extent_v) continue;
        best_t = t;
        hit = &p;
        hit_a = a;
        hit_b = b;
      }
      if (!hit) continue;
      double z = best_t * dir_cam.z();
      const double z_true = z;
      // 4x4 in-plane supersampling box-filters the texture over a two-pixel
      // footprint, approximating a band-limited (slightly defocused) camera;
      // without it, hard texture edges alias and the photometric term sees
      // model error of full contrast at exactly the high-gradient surfels the
      // tracker prefers.
      double intensity_acc = 0.0;
      const double footprint = 2.0 * z / K.fx;  // two pixels on the surface
      for (int sy = 0; sy < 4; ++sy) {
        for (int sx = 0; sx < 4; ++sx) {
          intensity_acc +=
              texture_intensity(hit->texture, hit_a + (sx - 1.5) * footprint / 4.0,
                                hit_b + (sy - 1.5) * footprint / 4.0);
        }
      }
      const float intensity =
          static_cast<float>(std::clamp(intensity_acc / 16.0, 0.0, 1.0));
      if (noise && rng) z += noise_model.axial_sigma(z_true) * rng->normal();
      if (z < 0.1 || z > 10.0) z = 0.0;
      frame.depth.at(x, y) = static_cast<float>(z);
      frame.intensity.at(x, y) = intensity;
      const auto g8 = static_cast<uint8_t>(std::lround(intensity * 255.0));
      frame.rgb[y * K.width + x] = {g8, g8, g8};
      if (gt) {
        gt->segment[y * K.width + x] = hit->segment;
        Eigen::Vector3d n_cam = R.transpose() * hit->normal;
        if (n_cam.dot(dir_cam) > 0) n_cam = -n_cam;
        gt->normal_cam[y * K.width + x] = n_cam.cast<float>();
        gt->true_depth.at(x, y) = static_cast<float>(z_true);
      }
    }
  }
  finalize_frame(frame);
  return frame;
}

Pose pose_look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                  const Eigen::Vector3d& up) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(Eigen::Vector3d::UnitX());
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;
  Pose pose;
  pose.rotation = Rotation3(R);
  pose.translation = eye;
  return pose;
}

SyntheticScene make_wall_scene(double z, int texture) {
  SyntheticScene s;
  s.add_plane({0, 0, z}, {0, 0, -1}, 4.0, 4.0, texture, 0);
  return s;
}

SyntheticScene make_corner_scene(double size, int tex_a, int tex_b, int tex_c) {
  // Three mutually orthogonal interior faces meeting at the origin corner,
  // normals pointing back into the open octant where the camera sits.
  SyntheticScene s;
  s.add_plane({0, 0, size}, {0, 0, -1}, size, size, tex_a, 0);
  s.add_plane({size, 0, 0}, {-1, 0, 0}, size, size, tex_b, 1);
  s.add_plane({0, size, 0}, {0, -1, 0}, size, size, tex_c, 2);
  return s;
}

SyntheticScene make_tripatch_scene(int tex_a, int tex_b, int tex_c, double extent) {
  // Rotate the standard basis so its diagonal points back at the camera;
  // every patch normal then faces a camera at the origin at ~55 degrees.
  const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(
      Eigen::Vector3d(1, 1, 1).normalized(), Eigen::Vector3d(0, 0, -1));
  const Eigen::Matrix3d R = q.toRotationMatrix();
  const Eigen::Vector3d centers[3] = {
      Eigen::Vector3d(-0.60, 0.00, 2.0), Eigen::Vector3d(0.60, 0.10, 2.0),
      Eigen::Vector3d(0.00, 0.56, 1.9)};
  const int tex[3] = {tex_a, tex_b, tex_c};
  SyntheticScene s;
  for (int i = 0; i < 3; ++i) {
    s.add_plane(centers[i], R.col(i), extent, extent, tex[i], i);
  }
  return s;
}

SyntheticScene make_room_scene() {
  SyntheticScene s;
  // Interior of a 6 m x 5 m x 3 m room (normals inward)...
  s.add_plane({0, 0, 3.0}, {0, 0, -1}, 3.0, 2.5, 1, 0);
  s.add_plane({0, 0, -3.0}, {0, 0, 1}, 3.0, 2.5, 2, 1);
  s.add_plane({3.0, 0, 0}, {-1, 0, 0}, 3.0, 2.5, 1, 2);
  s.add_plane({-3.0, 0, 0}, {1, 0, 0}, 3.0, 2.5, 2, 3);
  s.add_plane({0, 2.5, 0}, {0, -1, 0}, 3.0, 3.0, 3, 4);
  s.add_plane({0, -2.5, 0}, {0, 1, 0}, 3.0, 3.0, 0, 5);
  // ...plus four tilted panels.
  s.add_plane({1.0, 0.5, 1.5}, Eigen::Vector3d(1, 0, -1).normalized(), 0.8, 0.8, 1, 6);
  s.add_plane({-1.0, -0.5, 1.5}, Eigen::Vector3d(-1, 1, -1).normalized(), 0.8, 0.8, 2, 7);
  s.add_plane({0.5, -1.0, -1.0}, Eigen::Vector3d(0, 1, 1).normalized(), 0.7, 0.7, 1, 8);
  s.add_plane({-0.8, 1.0, -0.5}, Eigen::Vector3d(1, -1, 0).normalized(), 0.7, 0.7, 2, 9);
  return s;
}

}  // namespace dirslam
