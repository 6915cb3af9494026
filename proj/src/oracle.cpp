#include "smuciv/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace smuciv::oracle {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

DenseGaussian dense_joint(const ModelSpec& spec, const StructuralMatrices& mats,
                          const PriorConfig& prior, int T, DenseGaussian* z_order) {
  if (T > kMaxT) throw std::invalid_argument("dense oracle is limited to T <= 12");
  const int L = static_cast<int>(mats.A_tilde.size());
  (void)spec;
  const int nt = 7 * T;

  // H1: identity blocks, -A_i on the i-th block subdiagonal.
  Eigen::MatrixXd H1 = Eigen::MatrixXd::Identity(nt, nt);
  for (int t = 0; t < T; ++t)
    for (int i = 1; i <= L && t - i >= 0; ++i) H1.block(7 * t, 7 * (t - i), 7, 7) = -mats.A_tilde[i - 1];

  Eigen::MatrixXd Xi = Eigen::MatrixXd::Zero(nt, 4);
  Eigen::MatrixXd xi1(3, 4), xi2(3, 4);
  xi1 << -1, 2, 0, 0,  //
      0, 0, 1, 0,      //
      0, 0, 0, 1;
  xi2 << 0, -1, 0, 0,  //
      0, 0, 0, 0,      //
      0, 0, 0, 0;
  Xi.block(0, 0, 3, 4) = xi1;
  if (T >= 2) Xi.block(7, 0, 3, 4) = xi2;

  const int n = 4 + nt;
  Eigen::MatrixXd H2 = Eigen::MatrixXd::Identity(n, n);
  H2.block(4, 0, nt, 4) = -Xi;
  H2.block(4, 4, nt, nt) = H1;

  Eigen::MatrixXd Qb = Eigen::MatrixXd::Identity(7, 7);
  Eigen::Matrix3d Qt;
  Qt << -1, 0, 0,  //
      0, -1, 0,    //
      0, -1, -1;
  Qb.block(3, 0, 3, 3) = Qt;
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(n, n);
  for (int t = 0; t < T; ++t) D.block(4 + 7 * t, 4 + 7 * t, 7, 7) = Qb;
  const Eigen::MatrixXd H = H2 * D;

  Eigen::MatrixXd Omega = Eigen::MatrixXd::Zero(n, n);
  Omega.block(0, 0, 4, 4) = prior.V_tau00;
  for (int t = 0; t < T; ++t) Omega.block(4 + 7 * t, 4 + 7 * t, 7, 7) = mats.Sigma_tilde;

  Eigen::VectorXd tt = Eigen::VectorXd::Zero(n);
  tt.head(4) = prior.tau00_mean;

  const Eigen::MatrixXd Hinv = H.inverse();
  DenseGaussian z;
  z.mean = Hinv * tt;
  z.precision = H.transpose() * Omega.inverse() * H;
  z.cov = Hinv * Omega * Hinv.transpose();

  // Permutation z -> (tau, y).
  std::vector<int> order;
  for (int k = 0; k < 4; ++k) order.push_back(k);
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < 3; ++k) order.push_back(4 + 7 * t + k);
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < 4; ++k) order.push_back(4 + 7 * t + 3 + k);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) P(i, order[i]) = 1.0;

  DenseGaussian out;
  out.mean = P * z.mean;
  out.precision = P * z.precision * P.transpose();
  out.cov = P * z.cov * P.transpose();
  if (z_order) *z_order = std::move(z);
  return out;
}

DenseGaussian dense_condition(const DenseGaussian& g, int n_latent, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(g.mean.size());
  const int m = n - n_latent;
  if (y.size() != m) throw std::invalid_argument("conditioning vector has the wrong length");
  const Eigen::MatrixXd S_ty = g.cov.block(0, n_latent, n_latent, m);
  const Eigen::MatrixXd S_yy = g.cov.block(n_latent, n_latent, m, m);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(S_yy);
  DenseGaussian c;
  c.mean = g.mean.head(n_latent) + S_ty * ldlt.solve(y - g.mean.tail(m));
  c.cov = g.cov.block(0, 0, n_latent, n_latent) - S_ty * ldlt.solve(S_ty.transpose());
  c.precision = c.cov.inverse();
  return c;
}

double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov) {
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("covariance is not positive definite");
  const Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return -0.5 * (x.size() * kLog2Pi + log_det + z.squaredNorm());
}

double dense_log_density_tail(const DenseGaussian& g, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(g.mean.size());
  const int m = static_cast<int>(y.size());
  return gaussian_log_density(y, g.mean.tail(m), g.cov.block(n - m, n - m, m, m));
}

double analytic_local_level_ml(const Eigen::VectorXd& y, const LocalLevelParams& m) {
  const int T = static_cast<int>(y.size());
  Eigen::MatrixXd C(T, T);
  Eigen::VectorXd mu(T);
  for (int t = 1; t <= T; ++t) {
    mu(t - 1) = m.a0 + t * m.mu0;
    for (int s = 1; s <= T; ++s)
      C(t - 1, s - 1) = m.P0 + static_cast<double>(t) * s * m.V_mu +
                        std::min(t, s) * m.sigma_u2 + (t == s ? m.sigma_e2 : 0.0);
  }
  return gaussian_log_density(y, mu, C);
}

double kalman_local_level_ml(const Eigen::VectorXd& y, const LocalLevelParams& m) {
  // State (tau_t, mu); transition [[1, 1], [0, 1]].
  Eigen::Vector2d a(m.a0, m.mu0);
  Eigen::Matrix2d P;
  P << m.P0, 0, 0, m.V_mu;
  Eigen::Matrix2d F;
  F << 1, 1, 0, 1;
  Eigen::Matrix2d W = Eigen::Matrix2d::Zero();
  W(0, 0) = m.sigma_u2;
  double ll = 0.0;
  for (int t = 0; t < y.size(); ++t) {
    a = F * a;
    P = F * P * F.transpose() + W;
    const double f = P(0, 0) + m.sigma_e2;
    const double v = y(t) - a(0);
    ll -= 0.5 * (kLog2Pi + std::log(f) + v * v / f);
    const Eigen::Vector2d k = P.col(0) / f;
    a += k * v;
    P -= k * P.row(0);
  }
  return ll;
}

double quadrature_1d(const std::function<double(double)>& f, double a, double b, double tol) {
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, tol, &err);
  const double scale = std::max(1.0, std::abs(v));
  if (!(err <= std::max(tol, 1e-14) * scale * 10.0) || !std::isfinite(v)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", err);
    throw std::runtime_error(std::string("quadrature did not converge (error estimate ") + buf + ")");
  }
  return v;
}

}  // namespace smuciv::oracle
