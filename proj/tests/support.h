#pragma once

// Shared oracle helpers for the test suites. Everything here is intentionally
// independent of the library implementation paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace testsup {

// Equal-weight Fibonacci sphere grid; weight per node is 4*pi/n.
inline std::vector<Eigen::Vector3d> fibonacci_sphere(int n) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(n);
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = ga * i;
    pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return pts;
}

// Total-variation distance between two densities given by their log values on
// a grid; both are normalized over the grid before comparison.
inline double grid_tv(const std::vector<double>& log_p, const std::vector<double>& log_q) {
  double mp = -1e300, mq = -1e300;
  for (double v : log_p) mp = std::max(mp, v);
  for (double v : log_q) mq = std::max(mq, v);
  double sp = 0, sq = 0;
  std::vector<double> p(log_p.size()), q(log_q.size());
  for (size_t i = 0; i < log_p.size(); ++i) sp += (p[i] = std::exp(log_p[i] - mp));
  for (size_t i = 0; i < log_q.size(); ++i) sq += (q[i] = std::exp(log_q[i] - mq));
  double tv = 0;
  for (size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] / sp - q[i] / sq);
  return 0.5 * tv;
}

// One-sample Kolmogorov-Smirnov statistic against an analytic CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - (i + 1) / n));
    d = std::max(d, std::abs(f - i / n));
  }
  return d;
}

// Asymptotic two-sided KS critical value at significance alpha.
inline double ks_critical(double alpha, size_t n) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

// Composite Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 == 1) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace testsup
