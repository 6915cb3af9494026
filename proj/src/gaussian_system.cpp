#include "smuciv/gaussian_system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "smuciv/errors.hpp"

namespace smuciv {

namespace {

std::vector<int> position_map(int n, const std::vector<int>& idx) {
  std::vector<int> pos(n, -1);
  for (std::size_t k = 0; k < idx.size(); ++k) pos[idx[k]] = static_cast<int>(k);
  return pos;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out(k) = v(idx[k]);
  return out;
}

}  // namespace

Eigen::VectorXd JointGaussian::partitioned_mean() const {
  Eigen::VectorXd out(latent_index.size() + observed_index.size());
  out << latent_mean(), observed_mean();
  return out;
}

Eigen::VectorXd JointGaussian::latent_mean() const { return gather(mean, latent_index); }
Eigen::VectorXd JointGaussian::observed_mean() const { return gather(mean, observed_index); }

int z_tau0_index(int k) { return k; }
int z_tau_index(int t, int k) { return kTau0 + kPerPeriod * (t - 1) + k; }
int z_y_index(int t, int k) { return kTau0 + kPerPeriod * (t - 1) + 3 + k; }

int precision_bandwidth_bound(int p) { return 7 * (std::max(p, 2) + 1) + 3; }

SymBandMatrix extract_band_block(const SymBandMatrix& K, const std::vector<int>& idx) {
  const int n = K.size();
  const std::vector<int> pos = position_map(n, idx);
  int bw = 0;
  for (int j = 0; j < n; ++j) {
    if (pos[j] < 0) continue;
    for (int i = j; i <= std::min(n - 1, j + K.bandwidth()); ++i)
      if (pos[i] >= 0) bw = std::max(bw, std::abs(pos[i] - pos[j]));
  }
  SymBandMatrix out(static_cast<int>(idx.size()), bw);
  for (int j = 0; j < n; ++j) {
    if (pos[j] < 0) continue;
    for (int i = j; i <= std::min(n - 1, j + K.bandwidth()); ++i)
      if (pos[i] >= 0) out.add(pos[i], pos[j], K.lower(i, j));
  }
  return out;
}

Eigen::SparseMatrix<double> extract_cross_block(const SymBandMatrix& K, const std::vector<int>& rows,
                                                const std::vector<int>& cols) {
  const int n = K.size();
  const std::vector<int> rpos = position_map(n, rows);
  const std::vector<int> cpos = position_map(n, cols);
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < n; ++j)
    for (int i = j; i <= std::min(n - 1, j + K.bandwidth()); ++i) {
      const double v = K.lower(i, j);
      if (rpos[i] >= 0 && cpos[j] >= 0) trips.emplace_back(rpos[i], cpos[j], v);
      if (i != j && rpos[j] >= 0 && cpos[i] >= 0) trips.emplace_back(rpos[j], cpos[i], v);
    }
  Eigen::SparseMatrix<double> S(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  S.setFromTriplets(trips.begin(), trips.end());
  return S;
}

GaussianSystem build_joint(const ModelSpec& spec, const StructuralMatrices& mats,
                           const PriorConfig& prior, int T) {
  if (T <= spec.p) throw ConfigError("need T > p to build the joint system");
  const int L = spec.lag_count();
  if (static_cast<int>(mats.A_tilde.size()) != L)
    throw ConfigError("structural matrices carry the wrong number of lags");

  Eigen::LLT<Matrix7> sigma_llt(mats.Sigma_tilde);
  if (sigma_llt.info() != Eigen::Success)
    throw NumericalError("Sigma-tilde is not positive definite");
  Eigen::LLT<Eigen::Matrix4d> v0_llt(prior.V_tau00);
  if (v0_llt.info() != Eigen::Success) throw NumericalError("V_tau00 is not positive definite");

  const Matrix7 sigma_inv = sigma_llt.solve(Matrix7::Identity());
  const Eigen::Matrix4d v0_inv = v0_llt.solve(Eigen::Matrix4d::Identity());
  const Matrix7 Q = q_matrix();

  GaussianSystem sys;
  sys.T = T;
  sys.p = spec.p;
  sys.lags = L;
  sys.mats = mats;
  sys.tau00_mean = prior.tau00_mean;
  sys.V_tau00 = prior.V_tau00;
  sys.bandwidth_bound = precision_bandwidth_bound(spec.p);

  const int n = kTau0 + kPerPeriod * T;
  const int bw = 7 * (L + 1) - 1;
  if (bw > sys.bandwidth_bound)
    throw NumericalError("structural half-bandwidth exceeds the asserted bound");
  SymBandMatrix K(n, bw);

  // Lag-i coefficient on (tau_{t-i}, y_{t-i}): Q for i = 0, -A_i Q otherwise.
  std::vector<Matrix7> lag_blocks(L + 1);
  lag_blocks[0] = Q;
  for (int i = 1; i <= L; ++i) lag_blocks[i] = -mats.A_tilde[i - 1] * Q;

  // Initial-state rows: H row = [I_4 0], weight V_tau00^{-1}.
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b <= a; ++b) K.add(a, b, v0_inv(a, b));

  // Period rows: H_t' Sigma^{-1} H_t over the contiguous column window that
  // H_t touches.
  Eigen::MatrixXd G;
  for (int t = 1; t <= T; ++t) {
    const int first_period = std::max(1, t - L);
    const bool touches_tau0 = t <= 2;
    const int c0 = touches_tau0 ? 0 : z_tau_index(first_period, 0);
    const int c1 = z_tau_index(t, 0) + kPerPeriod;
    const int w = c1 - c0;
    G.setZero(7, w);
    if (touches_tau0) G.leftCols(4) = -xi_block(t);
    for (int s = first_period; s <= t; ++s)
      G.middleCols(z_tau_index(s, 0) - c0, 7) += lag_blocks[t - s];
    const Eigen::MatrixXd WG = sigma_inv * G;
    const Eigen::MatrixXd local = G.transpose() * WG;
    for (int b = 0; b < w; ++b)
      for (int a = b; a < w; ++a) {
        const double v = local(a, b);
        if (v != 0.0) K.add(c0 + a, c0 + b, v);
      }
  }

  // Mean: H mu_z = tau-tilde, solved block by block. First eta-tilde from
  // H1 eta = Xi tau00, then (tau_t, y_t) = Q^{-1} eta_t.
  Eigen::VectorXd mu(n);
  mu.head<4>() = prior.tau00_mean;
  std::vector<Vector7> eta(T + 1, Vector7::Zero());
  for (int t = 1; t <= T; ++t) {
    Vector7 e = Vector7::Zero();
    if (t <= 2) e.noalias() += xi_block(t) * prior.tau00_mean;
    for (int i = 1; i <= L && t - i >= 1; ++i) e.noalias() += mats.A_tilde[i - 1] * eta[t - i];
    eta[t] = e;
    // Q is unit lower triangular; invert it by forward substitution.
    Vector7 zt;
    zt.head<3>() = e.head<3>();
    zt(3) = e(3) + zt(0);
    zt(4) = e(4) + zt(1);
    zt(5) = e(5) + zt(1) + zt(2);
    zt(6) = e(6);
    mu.segment<7>(z_tau_index(t, 0)) = zt;
  }

  JointGaussian& jg = sys.joint;
  jg.precision = std::move(K);
  jg.mean = std::move(mu);
  jg.latent_index.reserve(kTau0 + 3 * T);
  jg.observed_index.reserve(4 * T);
  for (int k = 0; k < 4; ++k) jg.latent_index.push_back(z_tau0_index(k));
  for (int t = 1; t <= T; ++t)
    for (int k = 0; k < 3; ++k) jg.latent_index.push_back(z_tau_index(t, k));
  for (int t = 1; t <= T; ++t)
    for (int k = 0; k < 4; ++k) jg.observed_index.push_back(z_y_index(t, k));

  // |H| = 1, so log|K_z| = -log|Omega|.
  const double log_det_sigma = 2.0 * sigma_llt.matrixLLT().diagonal().array().log().sum();
  const double log_det_v0 = 2.0 * v0_llt.matrixLLT().diagonal().array().log().sum();
  jg.log_det_precision = -(log_det_v0 + T * log_det_sigma);
  return sys;
}

Eigen::SparseMatrix<double> GaussianSystem::h1() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (int t = 0; t < T; ++t) {
    for (int a = 0; a < 7; ++a) trips.emplace_back(7 * t + a, 7 * t + a, 1.0);
    for (int i = 1; i <= lags && t - i >= 0; ++i)
      for (int a = 0; a < 7; ++a)
        for (int b = 0; b < 7; ++b) {
          const double v = mats.A_tilde[i - 1](a, b);
          if (v != 0.0) trips.emplace_back(7 * t + a, 7 * (t - i) + b, -v);
        }
  }
  Eigen::SparseMatrix<double> m(7 * T, 7 * T);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::SparseMatrix<double> GaussianSystem::xi() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (int t = 1; t <= std::min(T, 2); ++t) {
    const auto blk = xi_block(t);
    for (int a = 0; a < 7; ++a)
      for (int b = 0; b < 4; ++b)
        if (blk(a, b) != 0.0) trips.emplace_back(7 * (t - 1) + a, b, blk(a, b));
  }
  Eigen::SparseMatrix<double> m(7 * T, 4);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::SparseMatrix<double> GaussianSystem::h2() const {
  const int n = 4 + 7 * T;
  std::vector<Eigen::Triplet<double>> trips;
  for (int a = 0; a < 4; ++a) trips.emplace_back(a, a, 1.0);
  const Eigen::SparseMatrix<double> x = xi();
  for (int k = 0; k < x.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(x, k); it; ++it)
      trips.emplace_back(4 + it.row(), it.col(), -it.value());
  const Eigen::SparseMatrix<double> hh = h1();
  for (int k = 0; k < hh.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(hh, k); it; ++it)
      trips.emplace_back(4 + it.row(), 4 + it.col(), it.value());
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::SparseMatrix<double> GaussianSystem::h() const {
  const int n = 4 + 7 * T;
  const Matrix7 Q = q_matrix();
  std::vector<Eigen::Triplet<double>> trips;
  for (int a = 0; a < 4; ++a) trips.emplace_back(a, a, 1.0);
  for (int t = 0; t < T; ++t)
    for (int a = 0; a < 7; ++a)
      for (int b = 0; b < 7; ++b)
        if (Q(a, b) != 0.0) trips.emplace_back(4 + 7 * t + a, 4 + 7 * t + b, Q(a, b));
  Eigen::SparseMatrix<double> D(n, n);
  D.setFromTriplets(trips.begin(), trips.end());
  return Eigen::SparseMatrix<double>(h2() * D);
}

Eigen::SparseMatrix<double> GaussianSystem::omega() const {
  const int n = 4 + 7 * T;
  std::vector<Eigen::Triplet<double>> trips;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (V_tau00(a, b) != 0.0) trips.emplace_back(a, b, V_tau00(a, b));
  for (int t = 0; t < T; ++t)
    for (int a = 0; a < 7; ++a)
      for (int b = 0; b < 7; ++b)
        if (mats.Sigma_tilde(a, b) != 0.0)
          trips.emplace_back(4 + 7 * t + a, 4 + 7 * t + b, mats.Sigma_tilde(a, b));
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::VectorXd GaussianSystem::tau_tilde() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(4 + 7 * T);
  v.head<4>() = tau00_mean;
  return v;
}

ConditionalGaussian::ConditionalGaussian(Eigen::VectorXd mean, SymBandMatrix precision)
    : mean_(std::move(mean)), precision_(std::move(precision)), factor_(precision_) {}

ConditionalGaussian::ConditionalGaussian(Eigen::VectorXd mean, SymBandMatrix precision,
                                         BandCholesky factor)
    : mean_(std::move(mean)), precision_(std::move(precision)), factor_(std::move(factor)) {}

Eigen::VectorXd ConditionalGaussian::sample(Rng& rng) const {
  Eigen::VectorXd e(mean_.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = standard_normal(rng);
  return mean_ + factor_.solve_upper(e);
}

namespace {

ConditionalGaussian condition_block(const JointGaussian& jg, const std::vector<int>& target,
                                    const std::vector<int>& given, const Eigen::VectorXd& value) {
  if (value.size() != static_cast<Eigen::Index>(given.size()))
    throw ConfigError("conditioning vector has length " + std::to_string(value.size()) +
                      ", expected " + std::to_string(given.size()));
  SymBandMatrix k_target = extract_band_block(jg.precision, target);
  const Eigen::SparseMatrix<double> k_cross = extract_cross_block(jg.precision, target, given);
  const Eigen::VectorXd mu_target = gather(jg.mean, target);
  const Eigen::VectorXd mu_given = gather(jg.mean, given);
  BandCholesky chol(k_target);
  const Eigen::VectorXd rhs = k_cross * (value - mu_given);
  Eigen::VectorXd mean = mu_target - chol.solve(rhs);
  return ConditionalGaussian(std::move(mean), std::move(k_target), std::move(chol));
}

}  // namespace

ConditionalGaussian condition_on_data(const JointGaussian& jg, const Eigen::VectorXd& y) {
  return condition_block(jg, jg.latent_index, jg.observed_index, y);
}

ConditionalGaussian condition_on_latent(const JointGaussian& jg, const Eigen::VectorXd& x) {
  return condition_block(jg, jg.observed_index, jg.latent_index, x);
}

MarginalY::MarginalY(const JointGaussian& jg)
    : mu_y_(gather(jg.mean, jg.observed_index)),
      k_y_(extract_band_block(jg.precision, jg.observed_index)),
      k_tau_y_(extract_cross_block(jg.precision, jg.latent_index, jg.observed_index)) {
  double log_det_k = 0.0;
  if (jg.log_det_precision)
    log_det_k = *jg.log_det_precision;
  else
    log_det_k = BandCholesky(jg.precision).log_det();
  double log_det_tau = 0.0;
  if (!jg.latent_index.empty()) {
    k_tau_factor_.emplace(extract_band_block(jg.precision, jg.latent_index));
    log_det_tau = k_tau_factor_->log_det();
  }
  // |K| = |K_tau| |K_y - K_y,tau K_tau^{-1} K_tau,y|
  log_det_schur_ = log_det_k - log_det_tau;
}

double MarginalY::log_density(const Eigen::VectorXd& y) const {
  if (y.size() != mu_y_.size()) throw ConfigError("observation vector has the wrong length");
  const Eigen::VectorXd d = y - mu_y_;
  double quad = d.dot(k_y_.multiply(d));
  if (k_tau_factor_) {
    const Eigen::VectorXd b = k_tau_y_ * d;
    quad -= b.dot(k_tau_factor_->solve(b));
  }
  const double n = static_cast<double>(d.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) + 0.5 * log_det_schur_ - 0.5 * quad;
}

MarginalY marginal_of_y(const JointGaussian& jg) { return MarginalY(jg); }

}  // namespace smuciv
