#pragma once

#include <Eigen/Core>

#include "dirslam/lie.h"
#include "dirslam/rng.h"

namespace dirslam {

// log(sinh t), stable for all t >= 0 up to ~1e300 (no overflow, no cancellation).
double log_sinh(double t);

// von-Mises-Fisher distribution on S^2 with density C3(tau) exp(tau mu^T x),
// C3(tau) = tau / (4 pi sinh tau). tau == 0 is the uniform distribution.
struct VonMisesFisher {
  UnitVec3 mode;
  double concentration = 0.0;
};

// Exact inverse-CDF sampler (closed form exists for the cosine component in
// three dimensions, so no rejection loop is needed).
UnitVec3 sample_vmf(const VonMisesFisher& d, RandomSource& rng);

// Log density at a unit vector; stable for concentrations up to 1e4 and above.
double vmf_log_pdf(const VonMisesFisher& d, const UnitVec3& x);

// Approximates the Bingham density exp(-1/2 n^T S n) by a vMF: mode is the
// eigenvector of the smallest eigenvalue e1 of S, concentration
// 2 e2 e3 / (e2 + e3) for eigenvalues e1 <= e2 <= e3. `literal_e2_squared`
// switches to 2 e2^2 / (e2 + e3) instead. Degenerate S (e2 + e3 ~ 0) yields
// the uniform distribution. Eigenvector sign is fixed by making the
// largest-magnitude component positive, so results are reproducible.
VonMisesFisher bingham_to_vmf(const Eigen::Matrix3d& S, bool literal_e2_squared = false);

}  // namespace dirslam
