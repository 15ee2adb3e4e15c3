#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dirslam {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Unit vector on S^2. Construction normalizes; a (near-)zero input falls back
// to +z so downstream math never sees a denormal direction.
class UnitVec3 {
 public:
  UnitVec3() : v_(0, 0, 1) {}
  explicit UnitVec3(const Eigen::Vector3d& v) {
    const double n = v.norm();
    v_ = n > 1e-15 ? Eigen::Vector3d(v / n) : Eigen::Vector3d(0, 0, 1);
  }

  const Eigen::Vector3d& vec() const { return v_; }
  double dot(const UnitVec3& o) const { return v_.dot(o.v_); }
  double dot(const Eigen::Vector3d& o) const { return v_.dot(o); }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }

  // Deterministic orthonormal tangent basis {e1, e2} with e1 x e2 = this.
  void tangent_basis(Eigen::Vector3d& e1, Eigen::Vector3d& e2) const {
    const Eigen::Vector3d a =
        std::abs(v_.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    e1 = a.cross(v_).normalized();
    e2 = v_.cross(e1);
  }

 private:
  Eigen::Vector3d v_;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& w);

// Rotation stored as a unit quaternion; every composition renormalizes, which
// keeps R^T R = I to well below 1e-9 over millions of chained operations.
class Rotation3 {
 public:
  Rotation3() : q_(Eigen::Quaterniond::Identity()) {}
  explicit Rotation3(const Eigen::Quaterniond& q) : q_(q.normalized()) {}
  explicit Rotation3(const Eigen::Matrix3d& R) : q_(R) { q_.normalize(); }

  static Rotation3 exp(const Eigen::Vector3d& w);
  Eigen::Vector3d log() const;

  Rotation3 operator*(const Rotation3& o) const {
    return Rotation3(Eigen::Quaterniond(q_ * o.q_));
  }
  Eigen::Vector3d operator*(const Eigen::Vector3d& x) const { return q_ * x; }
  Rotation3 inverse() const { return Rotation3(q_.conjugate()); }
  Eigen::Matrix3d matrix() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }

 private:
  Eigen::Quaterniond q_;
};

// Rigid transform T = (R, t) with an se(3) tangent-space covariance.
// Tangent ordering throughout the project: [translation; rotation].
struct Pose {
  Rotation3 rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Matrix6d covariance = Matrix6d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const {
    return rotation * x + translation;
  }
  Pose inverse() const;
  Pose operator*(const Pose& o) const;
  Eigen::Matrix4d matrix() const;
};

// exp/log on SE(3); inverse of each other to < 1e-9 for |rotation| < pi.
Pose se3_exp(const Vector6d& tangent);
Vector6d se3_log(const Pose& pose);

}  // namespace dirslam
