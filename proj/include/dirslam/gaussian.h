#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dirslam/rng.h"

namespace dirslam {

// 3-D Gaussian in moment form.
struct Gaussian3 {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();

  Eigen::Vector3d sample(RandomSource& rng) const {
    Eigen::LLT<Eigen::Matrix3d> llt(cov);
    return mean + llt.matrixL() * rng.normal3();
  }
};

// Information (canonical) form; admits rank-deficient precision, so it can
// represent the degenerate Gaussians produced by planarity constraints.
struct GaussianInfo3 {
  Eigen::Matrix3d info = Eigen::Matrix3d::Zero();        // Lambda
  Eigen::Vector3d info_mean = Eigen::Vector3d::Zero();   // Lambda * mu

  void add(const GaussianInfo3& o) {
    info += o.info;
    info_mean += o.info_mean;
  }

  // Requires positive-definite info.
  Gaussian3 to_moment() const {
    Gaussian3 g;
    g.cov = info.ldlt().solve(Eigen::Matrix3d::Identity());
    g.mean = g.cov * info_mean;
    return g;
  }
};

}  // namespace dirslam
