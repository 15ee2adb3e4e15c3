#include "dirslam/vmf.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace dirslam {

namespace {
constexpr double kLog4Pi = 2.5310242469692907930;  // log(4 pi)
constexpr double kTinyTau = 1e-12;
}  // namespace

double log_sinh(double t) {
  // sinh t = e^t (1 - e^{-2t}) / 2; the expm1 form avoids cancellation near 0.
  return t - M_LN2 + std::log(-std::expm1(-2.0 * t));
}

UnitVec3 sample_vmf(const VonMisesFisher& d, RandomSource& rng) {
  const double tau = d.concentration;
  const double u = rng.uniform();
  double t;
  if (tau < kTinyTau) {
    t = 2.0 * u - 1.0;
  } else {
    // Inverse CDF of the cosine component: F(t) ~ e^{tau t} on [-1, 1].
    t = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * tau)) / tau;
    t = std::clamp(t, -1.0, 1.0);
  }
  const double phi = 2.0 * M_PI * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - t * t));
  Eigen::Vector3d e1, e2;
  d.mode.tangent_basis(e1, e2);
  return UnitVec3(t * d.mode.vec() + r * (std::cos(phi) * e1 + std::sin(phi) * e2));
}

double vmf_log_pdf(const VonMisesFisher& d, const UnitVec3& x) {
  const double tau = d.concentration;
  if (tau < kTinyTau) return -kLog4Pi;
  return std::log(tau) - kLog4Pi - log_sinh(tau) + tau * d.mode.dot(x);
}

VonMisesFisher bingham_to_vmf(const Eigen::Matrix3d& S, bool literal_e2_squared) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(S);
  const Eigen::Vector3d evals = es.eigenvalues().cwiseMax(0.0);  // ascending
  Eigen::Vector3d q1 = es.eigenvectors().col(0);

  int imax = 0;
  q1.cwiseAbs().maxCoeff(&imax);
  if (q1[imax] < 0) q1 = -q1;

  const double e2 = evals[1];
  const double e3 = evals[2];
  VonMisesFisher out;
  out.mode = UnitVec3(q1);
  if (e2 + e3 < 1e-12) {
    out.concentration = 0.0;
  } else {
    out.concentration = literal_e2_squared ? 2.0 * e2 * e2 / (e2 + e3)
                                           : 2.0 * e2 * e3 / (e2 + e3);
  }
  return out;
}

}  // namespace dirslam
