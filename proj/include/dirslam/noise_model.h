#pragma once

#include <Eigen/Core>

#include "dirslam/camera.h"

namespace dirslam {

// Quadratic axial depth-noise model with depth-proportional lateral spread.
// Coefficients are configuration values for a structured-light RGB-D sensor,
// not calibrated ground truth.
struct DepthNoiseModel {
  double sigma_z_base = 0.0012;   // meters at the quadratic vertex
  double sigma_z_quad = 0.0019;   // meters per (z - z_ref)^2
  double z_ref = 0.4;             // meters
  double lateral_px = 0.8;        // lateral std in pixels, scaled by z / f

  double axial_sigma(double z) const {
    const double d = z - z_ref;
    return sigma_z_base + sigma_z_quad * d * d;
  }

  double lateral_sigma(double z, double focal) const {
    return z * lateral_px / focal;
  }

  // Full 3x3 covariance of a back-projected point in the camera frame:
  // diagonal in the ray-aligned frame (axial variance along the viewing ray,
  // lateral variance in the two orthogonal directions), rotated into camera
  // coordinates.
  Eigen::Matrix3d covariance(const Intrinsics& K, double u, double v, double z) const {
    const Eigen::Vector3d dir = K.ray(u, v);
    const double sz = axial_sigma(z);
    const double sxy = lateral_sigma(z, K.fx);
    return sxy * sxy * (Eigen::Matrix3d::Identity() - dir * dir.transpose()) +
           sz * sz * dir * dir.transpose();
  }
};

}  // namespace dirslam
