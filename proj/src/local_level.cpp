#include "smuciv/local_level.hpp"

#include <cmath>
#include <numbers>

#include "smuciv/errors.hpp"

namespace smuciv {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

int tau_pos(int t) { return t == 0 ? 0 : 2 * t - 1; }
int y_pos(int t) { return 2 * t; }

}  // namespace

JointGaussian local_level_joint(const LocalLevelModel& m, double mu, int T) {
  if (T < 1) throw ConfigError("T must be >= 1");
  if (!(m.P0 > 0) || !(m.sigma_u2 > 0) || !(m.sigma_e2 > 0) || !(m.V_mu > 0))
    throw ConfigError("local-level variances must be positive");
  const int n = 1 + 2 * T;
  SymBandMatrix K(n, 2);
  K.add(0, 0, 1.0 / m.P0);
  const double wu = 1.0 / m.sigma_u2, we = 1.0 / m.sigma_e2;
  for (int t = 1; t <= T; ++t) {
    const int a = tau_pos(t - 1), b = tau_pos(t), c = y_pos(t);
    K.add(a, a, wu);
    K.add(b, b, wu + we);
    K.add(b, a, -wu);
    K.add(c, c, we);
    K.add(c, b, -we);
  }
  JointGaussian jg;
  jg.precision = std::move(K);
  jg.mean.resize(n);
  jg.mean(0) = m.a0;
  jg.latent_index.push_back(0);
  for (int t = 1; t <= T; ++t) {
    jg.mean(tau_pos(t)) = m.a0 + t * mu;
    jg.mean(y_pos(t)) = m.a0 + t * mu;
    jg.latent_index.push_back(tau_pos(t));
    jg.observed_index.push_back(y_pos(t));
  }
  jg.log_det_precision = -(std::log(m.P0) + T * std::log(m.sigma_u2) + T * std::log(m.sigma_e2));
  return jg;
}

double local_level_log_likelihood(const LocalLevelModel& m, const Eigen::VectorXd& y, double mu) {
  const JointGaussian jg = local_level_joint(m, mu, static_cast<int>(y.size()));
  return marginal_of_y(jg).log_density(y);
}

double local_level_log_joint(const LocalLevelModel& m, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& tau, double mu) {
  const int T = static_cast<int>(y.size());
  if (tau.size() != T + 1) throw ConfigError("state path must have T + 1 entries");
  double lp = -0.5 * (kLog2Pi + std::log(m.P0) + (tau(0) - m.a0) * (tau(0) - m.a0) / m.P0);
  for (int t = 1; t <= T; ++t) {
    const double u = tau(t) - tau(t - 1) - mu, e = y(t - 1) - tau(t);
    lp -= 0.5 * (kLog2Pi + std::log(m.sigma_u2) + u * u / m.sigma_u2);
    lp -= 0.5 * (kLog2Pi + std::log(m.sigma_e2) + e * e / m.sigma_e2);
  }
  return lp;
}

LocalLevelSample simulate_local_level(const LocalLevelModel& m, int T, Rng& rng) {
  LocalLevelSample s;
  s.mu = m.mu0 + std::sqrt(m.V_mu) * standard_normal(rng);
  s.tau.resize(T + 1);
  s.y.resize(T);
  s.tau(0) = m.a0 + std::sqrt(m.P0) * standard_normal(rng);
  for (int t = 1; t <= T; ++t) {
    s.tau(t) = s.tau(t - 1) + s.mu + std::sqrt(m.sigma_u2) * standard_normal(rng);
    s.y(t - 1) = s.tau(t) + std::sqrt(m.sigma_e2) * standard_normal(rng);
  }
  return s;
}

LocalLevelChain local_level_gibbs(const LocalLevelModel& m, const Eigen::VectorXd& y, int n_burn,
                                  int n_keep, Rng& rng) {
  const int T = static_cast<int>(y.size());
  LocalLevelChain chain;
  chain.mu.reserve(n_keep);
  chain.tau.reserve(n_keep);
  double mu = m.mu0;
  for (int it = 0; it < n_burn + n_keep; ++it) {
    const JointGaussian jg = local_level_joint(m, mu, T);
    const Eigen::VectorXd tau = condition_on_data(jg, y).sample(rng);
    // mu | tau: Gaussian regression of the increments on a constant.
    const double prec = 1.0 / m.V_mu + T / m.sigma_u2;
    const double rhs = m.mu0 / m.V_mu + (tau(T) - tau(0)) / m.sigma_u2;
    mu = rhs / prec + standard_normal(rng) / std::sqrt(prec);
    if (it >= n_burn) {
      chain.mu.push_back(mu);
      chain.tau.push_back(tau);
    }
  }
  return chain;
}

MarglikResult local_level_ml(const LocalLevelModel& m, const Eigen::VectorXd& y,
                             const LocalLevelChain& chain, Estimator estimator) {
  const std::size_t n = chain.mu.size();
  if (n < 8) throw ConfigError("need at least eight draws");
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (estimator == Estimator::CMGD) {
      xs.push_back(Eigen::VectorXd::Constant(1, chain.mu[i]));
    } else {
      Eigen::VectorXd x(1 + chain.tau[i].size());
      x << chain.mu[i], chain.tau[i];
      xs.push_back(x);
    }
  }
  // Cross-fitted as in estimate_ml: each half is scored with q from the other.
  const std::size_t mid = n / 2;
  auto fit = [&](std::size_t lo, std::size_t hi) {
    const int d = static_cast<int>(xs.front().size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (std::size_t i = lo; i < hi; ++i) mean += xs[i];
    mean /= static_cast<double>(hi - lo);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = lo; i < hi; ++i) cov.noalias() += (xs[i] - mean) * (xs[i] - mean).transpose();
    cov /= static_cast<double>(hi - lo - 1);
    return TruncatedGaussian(mean, regularize_covariance(cov));
  };
  const TruncatedGaussian qs[2] = {fit(mid, n), fit(0, mid)};

  std::vector<double> terms;
  terms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lq = qs[i < mid ? 0 : 1].log_density(xs[i]);
    if (!std::isfinite(lq)) {
      terms.push_back(lq);
      continue;
    }
    const double mu = chain.mu[i];
    const double lp_mu =
        -0.5 * (kLog2Pi + std::log(m.V_mu) + (mu - m.mu0) * (mu - m.mu0) / m.V_mu);
    const double ll = estimator == Estimator::CMGD ? local_level_log_likelihood(m, y, mu)
                                                   : local_level_log_joint(m, y, chain.tau[i], mu);
    terms.push_back(lq - ll - lp_mu);
  }
  MarglikResult r = harmonic_mean_estimate(terms);
  r.estimator = estimator;
  return r;
}

}  // namespace smuciv
