#include "dirslam/config.h"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dirslam {

namespace {

struct Entry {
  const char* key;
  std::function<void(RunConfig&, std::istringstream&)> read;
  std::function<void(const RunConfig&, std::ostream&)> write;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Strings take the rest of the line (paths may contain spaces, empty is ok).
#define FIELD_STR(key, member)                                              \
  {key,                                                                     \
   [](RunConfig& c, std::istringstream& ss) {                               \
     std::string rest;                                                      \
     std::getline(ss, rest);                                                \
     const auto b = rest.find_first_not_of(" \t");                          \
     const auto e = rest.find_last_not_of(" \t\r");                         \
     c.member = b == std::string::npos ? "" : rest.substr(b, e - b + 1);    \
     ss.clear();                                                            \
   },                                                                       \
   [](const RunConfig& c, std::ostream& o) { o << c.member; }}
#define FIELD_NUM(key, member)                                              \
  {key, [](RunConfig& c, std::istringstream& ss) { ss >> c.member; },       \
   [](const RunConfig& c, std::ostream& o) { o << c.member; }}
#define FIELD_DBL(key, member)                                              \
  {key, [](RunConfig& c, std::istringstream& ss) { ss >> c.member; },       \
   [](const RunConfig& c, std::ostream& o) { o << fmt_double(c.member); }}
#define FIELD_BOOL(key, member)                                             \
  {key,                                                                     \
   [](RunConfig& c, std::istringstream& ss) {                               \
     int v;                                                                 \
     ss >> v;                                                               \
     c.member = v != 0;                                                     \
   },                                                                       \
   [](const RunConfig& c, std::ostream& o) { o << (c.member ? 1 : 0); }}
#define FIELD_VEC3(key, member)                                             \
  {key,                                                                     \
   [](RunConfig& c, std::istringstream& ss) {                               \
     ss >> c.member.x() >> c.member.y() >> c.member.z();                    \
   },                                                                       \
   [](const RunConfig& c, std::ostream& o) {                                \
     o << fmt_double(c.member.x()) << ' ' << fmt_double(c.member.y()) << ' '\
       << fmt_double(c.member.z());                                         \
   }}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      FIELD_STR("input.tum", input_tum),
      FIELD_STR("input.scene", input_scene),
      FIELD_STR("input.trajectory", input_trajectory),
      FIELD_NUM("input.frames", input_frames),
      FIELD_BOOL("input.noise", input_noise),
      FIELD_NUM("camera.width", camera_width),
      FIELD_NUM("camera.height", camera_height),
      FIELD_DBL("camera.fx", camera_fx),
      FIELD_DBL("camera.fy", camera_fy),
      FIELD_DBL("camera.cx", camera_cx),
      FIELD_DBL("camera.cy", camera_cy),
      FIELD_DBL("map.sigma_pl", map_sigma_pl),
      FIELD_NUM("map.knn_k", map_knn_k),
      FIELD_DBL("map.knn_radius", map_knn_radius),
      FIELD_DBL("map.tau_obs", map_tau_obs),
      FIELD_NUM("map.revisit_per_frame", map_revisit_per_frame),
      FIELD_DBL("seg.alpha", seg_alpha),
      FIELD_DBL("seg.a", seg_a),
      FIELD_DBL("seg.b", seg_b),
      FIELD_VEC3("seg.mu0", seg_mu0),
      FIELD_DBL("seg.lambda", seg_lambda),
      FIELD_NUM("gibbs.burn_in", gibbs_burn_in),
      FIELD_NUM("gibbs.min_samples", gibbs_min_samples),
      FIELD_NUM("gibbs.sweeps_per_frame", gibbs_sweeps_per_frame),
      FIELD_BOOL("bingham.literal_e2e2", bingham_literal_e2e2),
      FIELD_DBL("track.h_max", track_h_max),
      FIELD_DBL("track.lambda_min", track_lambda_min),
      FIELD_DBL("track.lambda_photo", track_lambda_photo),
      FIELD_DBL("track.sigma_intensity", track_sigma_intensity),
      FIELD_NUM("track.pyramid_levels", track_pyramid_levels),
      FIELD_STR("track.selection", track_selection),
      FIELD_NUM("track.max_selected", track_max_selected),
      FIELD_DBL("track.mahalanobis", track_mahalanobis),
      FIELD_DBL("track.normal_cone_deg", track_normal_cone_deg),
      FIELD_NUM("frontend.budget", frontend_budget),
      FIELD_DBL("frontend.grad_floor", frontend_grad_floor),
      FIELD_NUM("run.seed", run_seed),
      FIELD_STR("run.mode", run_mode),
  };
  return table;
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key.empty()) continue;
    bool found = false;
    for (const auto& e : entries()) {
      if (key == e.key) {
        e.read(cfg, ss);
        if (ss.fail()) {
          throw std::runtime_error("config line " + std::to_string(lineno) +
                                   ": bad value for " + key);
        }
        found = true;
        break;
      }
    }
    if (!found) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": unknown key " + key);
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse(in);
}

void RunConfig::dump(std::ostream& out) const {
  for (const auto& e : entries()) {
    out << e.key << ' ';
    e.write(*this, out);
    out << '\n';
  }
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  dump(out);
}

}  // namespace dirslam
