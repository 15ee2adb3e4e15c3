#include "dirslam/icp.h"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include "dirslam/normal_estimation.h"

namespace dirslam {

double entropy_bound(const Matrix6d& JTJ) {
  const Eigen::LDLT<Matrix6d> ldlt(JTJ);
  if (ldlt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  double log_det = 0;
  for (int i = 0; i < 6; ++i) {
    const double d = ldlt.vectorD()[i];
    if (d <= 0) return std::numeric_limits<double>::infinity();
    log_det += std::log(d);
  }
  return 3.0 * std::log(2.0 * M_PI * M_E) - 0.5 * log_det;
}

double photometric_weight(const SurfelEstimate& surfel, const Frame& frame,
                          const Pose& pose, const TrackingConfig& cfg) {
  if (cfg.lambda_photo <= 0) return 0.0;
  const Pose pose_inv = pose.inverse();
  const Eigen::Vector3d y = pose_inv.apply(surfel.position);
  if (y.z() <= 0.05) return 0.0;
  const Eigen::Vector2d uv = frame.intrinsics.project(y);
  if (!frame.intrinsics.in_bounds(uv.x(), uv.y(), 1.0)) return 0.0;
  double gu = 0, gv = 0;
  frame.intensity.bilinear_with_grad(uv.x(), uv.y(), gu, gv);
  Eigen::Matrix<double, 2, 3> P;
  const double iz = 1.0 / y.z();
  P << frame.intrinsics.fx * iz, 0, -frame.intrinsics.fx * y.x() * iz * iz, 0,
      frame.intrinsics.fy * iz, -frame.intrinsics.fy * y.y() * iz * iz;
  const Eigen::Matrix<double, 1, 2> g(gu, gv);
  // The surfel position uncertainty seen through the image gradient is part
  // of the residual variance; without it, high-gradient rows turn map noise
  // straight into pose error.
  const Eigen::Matrix3d cov_y =
      pose_inv.rotation.matrix() * surfel.cov * pose_inv.rotation.matrix().transpose();
  const double var_photo = cfg.sigma_intensity * cfg.sigma_intensity +
                           (g * P * cov_y * P.transpose() * g.transpose())(0, 0);
  return std::sqrt(cfg.lambda_photo / var_photo);
}

IcpRows icp_residual_jacobian(const SurfelEstimate& surfel, const Eigen::Vector3d& x_cam,
                              const Eigen::Matrix3d& cov_obs_world, const Frame& frame,
                              const Pose& pose, const TrackingConfig& cfg,
                              double photo_weight) {
  IcpRows rows;
  const Eigen::Matrix3d R = pose.rotation.matrix();
  const Eigen::Vector3d& n = surfel.normal;

  const double var_p2pl =
      n.dot((cov_obs_world + surfel.cov) * n) + cfg.sigma_pl * cfg.sigma_pl;
  const double inv_sigma = 1.0 / std::sqrt(var_p2pl);

  rows.e[0] = n.dot(pose.apply(x_cam) - surfel.position) * inv_sigma;
  Eigen::Matrix<double, 3, 6> Jp;
  Jp.leftCols<3>() = R;
  Jp.rightCols<3>() = -R * skew(x_cam);
  rows.J[0] = inv_sigma * n.transpose() * Jp;
  rows.count = 1;
  if (photo_weight <= 0) return rows;

  // Photometric row through the bilinear interpolant, whitened by the frozen
  // per-selection weight.
  const Pose pose_inv = pose.inverse();
  const Eigen::Vector3d y = pose_inv.apply(surfel.position);
  if (y.z() > 0.05) {
    const Eigen::Vector2d uv = frame.intrinsics.project(y);
    if (frame.intrinsics.in_bounds(uv.x(), uv.y(), 1.0)) {
      double gu = 0, gv = 0;
      const double val = frame.intensity.bilinear_with_grad(uv.x(), uv.y(), gu, gv);
      // Gross intensity mismatches (occlusion fringes, texture aliasing) get
      // no photometric row; the p2pl row still participates.
      if (std::abs(val - surfel.intensity) * photo_weight >
          3.0 * std::sqrt(cfg.lambda_photo)) {
        return rows;
      }
      Eigen::Matrix<double, 2, 3> P;
      const double iz = 1.0 / y.z();
      P << frame.intrinsics.fx * iz, 0, -frame.intrinsics.fx * y.x() * iz * iz, 0,
          frame.intrinsics.fy * iz, -frame.intrinsics.fy * y.y() * iz * iz;
      rows.e[1] = (val - surfel.intensity) * photo_weight;
      Eigen::Matrix<double, 3, 6> Jy;
      Jy.leftCols<3>() = -Eigen::Matrix3d::Identity();
      Jy.rightCols<3>() = skew(y);
      rows.J[1] = photo_weight * Eigen::Matrix<double, 1, 2>(gu, gv) * P * Jy;
      rows.count = 2;
    }
  }
  return rows;
}

namespace {

struct Candidate {
  const SurfelEstimate* surfel = nullptr;
  float grad = 0.f;
};

// Per-level cache of pixel normal estimates; associations revisit the same
// pixels across Gauss-Newton iterations.
struct NormalCache {
  std::unordered_map<uint64_t, std::optional<Eigen::Vector3d>> cache;
  const std::optional<Eigen::Vector3d>& get(const Frame& frame, int u, int v) {
    const uint64_t key = (static_cast<uint64_t>(u) << 32) | static_cast<uint32_t>(v);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, estimate_normal(frame, u, v)).first;
    return it->second;
  }
};

// Full occlusion/agreement gate at the current pose; fills the association
// when the candidate passes.
struct GatedObservation {
  Eigen::Vector3d x_cam;
  Eigen::Matrix3d cov_world;
  double photo_weight = 0.0;  // frozen at selection time
};
std::optional<GatedObservation> gate_candidate(const SurfelEstimate& s, const Frame& frame,
                                               const Pose& pose, const Pose& pose_inv,
                                               const DepthNoiseModel& noise,
                                               const AssociationGates& gates,
                                               NormalCache& normals) {
  const Eigen::Vector3d y = pose_inv.apply(s.position);
  if (y.z() <= 0.05) return std::nullopt;
  const Eigen::Vector2d uv = frame.intrinsics.project(y);
  if (!frame.intrinsics.in_bounds(uv.x(), uv.y(), 1.0)) return std::nullopt;
  const int px = static_cast<int>(std::lround(uv.x()));
  const int py = static_cast<int>(std::lround(uv.y()));
  if (!frame.depth_valid(px, py)) return std::nullopt;
  const double z = frame.depth.at(px, py);
  const Eigen::Vector3d x_cam = frame.intrinsics.backproject(px, py, z);
  const Eigen::Matrix3d cov_obs = noise.covariance(frame.intrinsics, px, py, z);

  const Eigen::Matrix3d R = pose.rotation.matrix();
  const Eigen::Matrix3d cov_world = R * cov_obs * R.transpose();
  const Eigen::Vector3d r = pose.apply(x_cam) - s.position;
  const Eigen::Matrix3d gate_cov = cov_world + s.cov;
  const double m2 = r.dot(gate_cov.ldlt().solve(r));
  if (m2 > gates.mahalanobis_max * gates.mahalanobis_max) return std::nullopt;

  const auto& n_est = normals.get(frame, px, py);
  if (!n_est) return std::nullopt;
  if ((R * (*n_est)).dot(s.normal) < std::cos(gates.normal_cone_deg * M_PI / 180.0)) {
    return std::nullopt;
  }

  // Whitened point-to-plane consistency: rejects crease/seam observations
  // that slip through the 3-D gate but sit on a differently oriented surface.
  const double var_p2pl = s.normal.dot((cov_world + s.cov) * s.normal);
  if (var_p2pl > 0) {
    const double e = s.normal.dot(r);
    if (e * e > gates.mahalanobis_max * gates.mahalanobis_max * var_p2pl) {
      return std::nullopt;
    }
  }
  return GatedObservation{x_cam, cov_world, 0.0};
}

double total_cost(const std::vector<std::pair<const SurfelEstimate*, GatedObservation>>& sel,
                  const Frame& frame, const Pose& pose, const TrackingConfig& cfg) {
  double cost = 0;
  for (const auto& [s, obs] : sel) {
    const IcpRows rows = icp_residual_jacobian(*s, obs.x_cam, obs.cov_world, frame, pose,
                                               cfg, obs.photo_weight);
    for (int r = 0; r < rows.count; ++r) cost += rows.e[r] * rows.e[r];
  }
  return cost;
}

double min_eigenvalue(const Matrix6d& JTJ) {
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(JTJ, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

TrackResult incremental_icp(const Frame& frame, const MapSnapshot& snapshot,
                            const Pose& init_pose, const TrackingConfig& cfg,
                            const DepthNoiseModel& noise, RandomSource* rng) {
  const auto t0 = std::chrono::steady_clock::now();
  TrackResult result;
  result.pose = init_pose;
  result.pose.covariance = Matrix6d::Zero();

  std::vector<Frame> pyramid{frame};
  for (int l = 1; l < cfg.pyramid_levels; ++l) pyramid.push_back(downsample(pyramid.back()));

  Matrix6d JTJ = Matrix6d::Zero();
  bool ever_solved = false;

  for (int level = cfg.pyramid_levels - 1; level >= 0; --level) {
    const Frame& fr = pyramid[level];
    NormalCache normals;

    // Candidates visible at the initial pose of this level, bucketed by
    // directional segment in decreasing-gradient order. Projection and
    // occlusion gating rerun at pop time with the current pose.
    std::vector<Candidate> candidates;
    {
      const Pose inv = result.pose.inverse();
      for (const auto& s : snapshot.surfels) {
        const Eigen::Vector3d y = inv.apply(s.position);
        if (y.z() <= 0.05) continue;
        const Eigen::Vector2d uv = fr.intrinsics.project(y);
        if (!fr.intrinsics.in_bounds(uv.x(), uv.y(), 1.0)) continue;
        if (s.normal.dot(s.position - result.pose.translation) >= 0) continue;
        candidates.push_back({&s, s.grad_mag});
      }
    }
    result.diag.visible = std::max(result.diag.visible, candidates.size());

    std::vector<std::vector<int>> queues;
    if (cfg.random_selection && rng) {
      queues.emplace_back(candidates.size());
      auto& q = queues.back();
      for (size_t i = 0; i < q.size(); ++i) q[i] = static_cast<int>(i);
      for (size_t i = q.size(); i > 1; --i) std::swap(q[i - 1], q[rng->uniform_int(static_cast<int>(i))]);
    } else {
      std::unordered_map<int32_t, size_t> bucket_of;
      for (size_t i = 0; i < candidates.size(); ++i) {
        const int32_t z = candidates[i].surfel->label;
        auto it = bucket_of.find(z);
        if (it == bucket_of.end()) {
          it = bucket_of.emplace(z, queues.size()).first;
          queues.emplace_back();
        }
        queues[it->second].push_back(static_cast<int>(i));
      }
      for (auto& q : queues) {
        std::sort(q.begin(), q.end(), [&](int a, int b) {
          if (candidates[a].grad != candidates[b].grad) {
            return candidates[a].grad > candidates[b].grad;
          }
          return candidates[a].surfel->id < candidates[b].surfel->id;
        });
      }
      // Deterministic queue order (unordered_map bucket order is not).
      std::sort(queues.begin(), queues.end(), [&](const auto& a, const auto& b) {
        return candidates[a.front()].surfel->label < candidates[b.front()].surfel->label;
      });
    }

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
      const Pose pose_inv = result.pose.inverse();
      JTJ.setZero();
      Vector6d JTb = Vector6d::Zero();
      std::vector<std::pair<const SurfelEstimate*, GatedObservation>> selected;
      std::vector<size_t> cursors(queues.size(), 0);

      double entropy = std::numeric_limits<double>::infinity();
      double lambda_min = 0.0;
      bool satisfied = false;
      size_t exhausted = 0;
      size_t k = 0;
      while (!satisfied && exhausted < queues.size()) {
        if (cfg.max_selected > 0 &&
            static_cast<int>(selected.size()) >= cfg.max_selected) {
          break;
        }
        // Round-robin over segment queues.
        exhausted = 0;
        for (size_t probe = 0; probe < queues.size(); ++probe) {
          const size_t qi = (k + probe) % queues.size();
          if (cursors[qi] >= queues[qi].size()) {
            ++exhausted;
            continue;
          }
          k = qi;
          break;
        }
        if (exhausted == queues.size()) break;
        const Candidate& cand = candidates[queues[k][cursors[k]++]];
        k = (k + 1) % queues.size();

        auto obs = gate_candidate(*cand.surfel, fr, result.pose, pose_inv, noise,
                                  cfg.gates, normals);
        if (!obs) continue;  // occlusion reasoning failed; skip
        obs->photo_weight = photometric_weight(*cand.surfel, fr, result.pose, cfg);
        const IcpRows rows = icp_residual_jacobian(*cand.surfel, obs->x_cam, obs->cov_world,
                                                   fr, result.pose, cfg, obs->photo_weight);
        for (int r = 0; r < rows.count; ++r) {
          JTJ.noalias() += rows.J[r].transpose() * rows.J[r];
          JTb.noalias() -= rows.J[r].transpose() * rows.e[r];
        }
        selected.emplace_back(cand.surfel, *obs);

        entropy = entropy_bound(JTJ);
        // Entropy updates every addition (cheap log-det); the exact smallest
        // eigenvalue only every few additions.
        if (entropy <= cfg.h_max &&
            selected.size() % std::max(1, cfg.lambda_check_stride) == 0) {
          lambda_min = min_eigenvalue(JTJ);
          satisfied = lambda_min >= cfg.lambda_min_thresh;
        }
      }

      lambda_min = min_eigenvalue(JTJ);
      result.diag.selected = static_cast<int>(selected.size());
      result.diag.entropy = entropy_bound(JTJ);
      result.diag.lambda_min = lambda_min;

      if (lambda_min <= 1e-9) {
        // Singular information after exhausting the queues: tracking lost.
        result.pose = init_pose;
        result.pose.covariance = Matrix6d::Zero();
        result.diag.lost = true;
        result.diag.ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        return result;
      }

      // Solve in the eigenbasis and keep only adequately observed
      // directions: p2pl-blind motions (in-plane slides of a plane set) stay
      // at the motion-prior value instead of exploding the step.
      Eigen::SelfAdjointEigenSolver<Matrix6d> es(JTJ);
      Vector6d omega = Vector6d::Zero();
      const double lambda_floor = std::max(1e-9, 1e-8 * es.eigenvalues()(5));
      for (int i = 0; i < 6; ++i) {
        if (es.eigenvalues()(i) > lambda_floor) {
          const Vector6d v = es.eigenvectors().col(i);
          omega += v * (v.dot(JTb) / es.eigenvalues()(i));
        }
      }
      const double cost0 = total_cost(selected, fr, result.pose, cfg);
      double step = 1.0;
      Pose next = result.pose * se3_exp(omega);
      double cost1 = total_cost(selected, fr, next, cfg);
      for (int h = 0; h < cfg.max_step_halvings && cost1 > cost0; ++h) {
        step *= 0.5;
        next = result.pose * se3_exp((step * omega).eval());
        cost1 = total_cost(selected, fr, next, cfg);
      }
      if (cost1 <= cost0) {
        result.pose = next;
        result.diag.cost = cost1;
      } else {
        result.diag.cost = cost0;  // no acceptable step; keep the pose
        step = 0.0;
      }
      ++result.diag.iterations;
      ever_solved = true;
      if (step * omega.norm() < cfg.convergence_eps) break;
    }
  }

  if (ever_solved) {
    result.pose.covariance = JTJ.ldlt().solve(Matrix6d::Identity());
  }
  result.diag.ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

}  // namespace dirslam
