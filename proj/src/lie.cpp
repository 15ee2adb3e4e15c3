#include "dirslam/lie.h"

#include <cmath>

namespace dirslam {

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

Rotation3 Rotation3::exp(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  Eigen::Quaterniond q;
  if (theta < 1e-10) {
    const Eigen::Vector3d half = 0.5 * w;
    q = Eigen::Quaterniond(1.0, half.x(), half.y(), half.z());
  } else {
    const double s = std::sin(0.5 * theta) / theta;
    q = Eigen::Quaterniond(std::cos(0.5 * theta), s * w.x(), s * w.y(), s * w.z());
  }
  return Rotation3(q);
}

Eigen::Vector3d Rotation3::log() const {
  Eigen::Quaterniond q = q_;
  if (q.w() < 0) q.coeffs() *= -1.0;
  const double vn = q.vec().norm();
  if (vn < 1e-12) return 2.0 * q.vec();
  const double theta = 2.0 * std::atan2(vn, q.w());
  return (theta / vn) * q.vec();
}

namespace {

// Left Jacobian of SO(3): translation part of se(3) exp.
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d W = skew(w);
  if (theta < 1e-6) {
    return Eigen::Matrix3d::Identity() + 0.5 * W + (1.0 / 6.0) * W * W;
  }
  const double t2 = theta * theta;
  const double a = (1.0 - std::cos(theta)) / t2;
  const double b = (theta - std::sin(theta)) / (t2 * theta);
  return Eigen::Matrix3d::Identity() + a * W + b * W * W;
}

Eigen::Matrix3d so3_left_jacobian_inv(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d W = skew(w);
  if (theta < 1e-6) {
    return Eigen::Matrix3d::Identity() - 0.5 * W + (1.0 / 12.0) * W * W;
  }
  const double half = 0.5 * theta;
  const double c = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  return Eigen::Matrix3d::Identity() - 0.5 * W + c * W * W;
}

}  // namespace

Pose Pose::inverse() const {
  Pose out;
  out.rotation = rotation.inverse();
  out.translation = -(out.rotation * translation);
  return out;
}

Pose Pose::operator*(const Pose& o) const {
  Pose out;
  out.rotation = rotation * o.rotation;
  out.translation = rotation * o.translation + translation;
  return out;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose se3_exp(const Vector6d& tangent) {
  const Eigen::Vector3d v = tangent.head<3>();
  const Eigen::Vector3d w = tangent.tail<3>();
  Pose out;
  out.rotation = Rotation3::exp(w);
  out.translation = so3_left_jacobian(w) * v;
  return out;
}

Vector6d se3_log(const Pose& pose) {
  const Eigen::Vector3d w = pose.rotation.log();
  Vector6d out;
  out.head<3>() = so3_left_jacobian_inv(w) * pose.translation;
  out.tail<3>() = w;
  return out;
}

}  // namespace dirslam
