#pragma once

#include <Eigen/Core>

namespace dirslam {

// Pinhole camera model. Pixel coordinates follow the usual convention where
// (0, 0) is the center of the top-left pixel.
struct Intrinsics {
  int width = 640;
  int height = 480;
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;

  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }

  Eigen::Vector3d backproject(double u, double v, double z) const {
    return {(u - cx) / fx * z, (v - cy) / fy * z, z};
  }

  // Unit direction of the ray through pixel (u, v).
  Eigen::Vector3d ray(double u, double v) const {
    return backproject(u, v, 1.0).normalized();
  }

  bool in_bounds(double u, double v, double margin = 0.0) const {
    return u >= margin && v >= margin && u <= width - 1 - margin &&
           v <= height - 1 - margin;
  }

  // Intrinsics of the next-coarser pyramid level (2x2 decimation).
  Intrinsics half() const {
    Intrinsics h = *this;
    h.width = width / 2;
    h.height = height / 2;
    h.fx = 0.5 * fx;
    h.fy = 0.5 * fy;
    h.cx = 0.5 * (cx + 0.5) - 0.5;
    h.cy = 0.5 * (cy + 0.5) - 0.5;
    return h;
  }
};

}  // namespace dirslam
