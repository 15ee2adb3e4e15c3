#include "dirslam/directional_model.h"

#include <algorithm>
#include <cmath>

namespace dirslam {

namespace {

constexpr int kBaseTableSize = 513;

// log g(t) with g(t) = t / sinh(t), g(0) = 1. Decays like -t for large t.
double log_g(double t) {
  if (t < 1e-12) return 0.0;
  return std::log(t) - log_sinh(t);
}

int sample_categorical(const std::vector<double>& probs, RandomSource& rng) {
  const double u = rng.uniform();
  double acc = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

DirectionalModel::DirectionalModel(const SegmentationParams& params) : params_(params) {
  tau_grid_.resize(params_.tau_grid_size);
  const double lmin = std::log(params_.tau_grid_min);
  const double lmax = std::log(params_.tau_grid_max);
  for (int i = 0; i < params_.tau_grid_size; ++i) {
    tau_grid_[i] = std::exp(lmin + (lmax - lmin) * i / (params_.tau_grid_size - 1));
  }
  base_marginal_table_.resize(kBaseTableSize);
  for (int i = 0; i < kBaseTableSize; ++i) {
    const double c = -1.0 + 2.0 * i / (kBaseTableSize - 1);
    base_marginal_table_[i] = base_log_marginal_exact(c);
  }
}

int32_t DirectionalModel::total_count() const {
  int32_t n = 0;
  for (const auto& c : clusters_) n += c.count;
  return n;
}

double DirectionalModel::base_log_marginal_exact(double cos_to_mu0) const {
  // Marginal of one normal under the base measure, both vMF parameters
  // integrated out:
  //   p(n) = [ int g(t)^{a+1} / g(bt_n t) dt ] / [ 4 pi int g(t)^a / g(b t) dt ]
  // with g(t) = t / sinh(t) and bt_n = |n + b mu0| = sqrt(1 + b^2 + 2 b c).
  // The integrands decay like exp(-(a+1-bt_n) t) resp. exp(-(a-b) t), so a
  // truncated Simpson rule over log-safe integrands is exact to ~1e-10.
  const double a = params_.a;
  const double b = params_.b;
  const double bt = std::sqrt(std::max(0.0, 1.0 + b * b + 2.0 * b * cos_to_mu0));

  auto integral = [](double expo, double scale, double decay) {
    // int_0^inf g(t)^expo / g(scale * t) dt via composite Simpson.
    const double T = std::min(2000.0, 60.0 / std::max(0.05, decay));
    const int n = 2048;
    const double h = T / n;
    double s = 0;
    for (int i = 0; i <= n; ++i) {
      const double t = i * h;
      const double lg = expo * log_g(t) - (scale > 1e-12 ? log_g(scale * t) : 0.0);
      const double f = std::exp(lg);
      s += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return s * h / 3.0;
  };

  const double num = integral(a + 1.0, bt, a + 1.0 - bt);
  const double den = integral(a, b, a - b);
  return std::log(num) - std::log(4.0 * M_PI * den);
}

double DirectionalModel::base_log_marginal(double cos_to_mu0) const {
  const double c = std::clamp(cos_to_mu0, -1.0, 1.0);
  const double x = (c + 1.0) * 0.5 * (kBaseTableSize - 1);
  const int i0 = std::min(static_cast<int>(x), kBaseTableSize - 2);
  const double f = x - i0;
  return (1.0 - f) * base_marginal_table_[i0] + f * base_marginal_table_[i0 + 1];
}

std::vector<double> DirectionalModel::label_conditional(
    const Eigen::Vector3d& n, const std::vector<int32_t>& neighbor_labels) const {
  const int K = cluster_count();
  const double lambda = params_.lambda_mrf;
  const double n_nbrs = static_cast<double>(neighbor_labels.size());

  std::vector<int> nbr_count(K, 0);
  for (int32_t z : neighbor_labels) {
    if (z >= 0 && z < K) ++nbr_count[z];
  }

  std::vector<double> logw(K + 1, -std::numeric_limits<double>::infinity());
  const UnitVec3 nu(n);
  for (int k = 0; k < K; ++k) {
    if (clusters_[k].count <= 0) continue;
    const VonMisesFisher d{UnitVec3(clusters_[k].mu), clusters_[k].tau};
    logw[k] = lambda * nbr_count[k] - lambda * n_nbrs + std::log(double(clusters_[k].count)) +
              vmf_log_pdf(d, nu);
  }
  if (params_.alpha > 0) {
    logw[K] = -lambda * n_nbrs + std::log(params_.alpha) +
              base_log_marginal(n.normalized().dot(params_.mu0));
  }

  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logw) mx = std::max(mx, v);
  std::vector<double> w(K + 1, 0.0);
  double sum = 0;
  for (int k = 0; k <= K; ++k) {
    if (std::isfinite(logw[k])) sum += (w[k] = std::exp(logw[k] - mx));
  }
  for (double& v : w) v /= sum;
  return w;
}

int DirectionalModel::sample_label(const Eigen::Vector3d& n,
                                   const std::vector<int32_t>& neighbor_labels,
                                   RandomSource& rng) {
  const auto probs = label_conditional(n, neighbor_labels);
  int k = sample_categorical(probs, rng);
  if (k == cluster_count()) k = create_cluster(n, rng);
  return k;
}

std::vector<double> DirectionalModel::tau_log_posterior(const std::vector<double>& taus,
                                                        const Eigen::Vector3d& normal_sum,
                                                        int member_count) const {
  const Eigen::Vector3d theta = normal_sum + params_.b * params_.mu0;
  const double a_post = params_.a + member_count;
  const double b_post = theta.norm();
  std::vector<double> out(taus.size());
  for (size_t i = 0; i < taus.size(); ++i) {
    out[i] = a_post * log_g(taus[i]) - (b_post > 1e-12 ? log_g(b_post * taus[i]) : 0.0);
  }
  return out;
}

std::pair<Eigen::Vector3d, double> DirectionalModel::sample_posterior_params(
    const Eigen::Vector3d& normal_sum, int member_count, RandomSource& rng) const {
  const Eigen::Vector3d theta = normal_sum + params_.b * params_.mu0;
  const double b_post = theta.norm();
  const Eigen::Vector3d mu_post = b_post > 1e-12 ? Eigen::Vector3d(theta / b_post)
                                                 : params_.mu0;

  // tau from its grid posterior (categorical over a log-spaced grid with
  // trapezoid cell widths), then mu | tau.
  const auto logp = tau_log_posterior(tau_grid_, normal_sum, member_count);
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logp) mx = std::max(mx, v);
  std::vector<double> w(tau_grid_.size());
  double sum = 0;
  for (size_t i = 0; i < tau_grid_.size(); ++i) {
    const double left = i == 0 ? tau_grid_[0] : tau_grid_[i - 1];
    const double right = i + 1 == tau_grid_.size() ? tau_grid_.back() : tau_grid_[i + 1];
    sum += (w[i] = std::exp(logp[i] - mx) * 0.5 * (right - left));
  }
  for (double& v : w) v /= sum;
  const double tau = tau_grid_[sample_categorical(w, rng)];

  const UnitVec3 mu = sample_vmf({UnitVec3(mu_post), b_post * tau}, rng);
  return {mu.vec(), tau};
}

int DirectionalModel::create_cluster(const Eigen::Vector3d& n, RandomSource& rng) {
  auto [mu, tau] = sample_posterior_params(n, 1, rng);
  clusters_.push_back({mu, tau, 0});
  return cluster_count() - 1;
}

void DirectionalModel::set_cluster_params(int k, const Eigen::Vector3d& mu, double tau) {
  clusters_[k].mu = mu;
  clusters_[k].tau = tau;
}

std::vector<int32_t> DirectionalModel::garbage_collect() {
  std::vector<int32_t> remap(clusters_.size(), -1);
  std::vector<VmfCluster> kept;
  kept.reserve(clusters_.size());
  for (size_t k = 0; k < clusters_.size(); ++k) {
    if (clusters_[k].count > 0) {
      remap[k] = static_cast<int32_t>(kept.size());
      kept.push_back(clusters_[k]);
    }
  }
  clusters_ = std::move(kept);
  return remap;
}

}  // namespace dirslam
