#pragma once

#include <functional>

#include <Eigen/Dense>

#include "smuciv/model.hpp"

// Brute-force reference implementations for tests. Everything here is dense
// and at least O(n^3); nothing calls into the library being validated.
namespace smuciv::oracle {

inline constexpr int kMaxT = 12;

struct DenseGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd precision;
};

// Joint law of (tau', y')' (tau first, then y, each in time order) obtained
// by forming H1, Xi, H2, Q, H and Omega literally and inverting H densely.
// Also returns the same quantities in interleaved z-order through z_order.
// Throws std::invalid_argument for T > kMaxT.
DenseGaussian dense_joint(const ModelSpec& spec, const StructuralMatrices& mats,
                          const PriorConfig& prior, int T, DenseGaussian* z_order = nullptr);

// Mean and covariance of the first n_latent coordinates given the rest = y,
// from the covariance-form Schur complement.
DenseGaussian dense_condition(const DenseGaussian& g, int n_latent, const Eigen::VectorXd& y);

// Log-density of the last block (length y.size()) of g at y.
double dense_log_density_tail(const DenseGaussian& g, const Eigen::VectorXd& y);

// Gaussian log-density from a dense covariance.
double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov);

// Local level with drift, as documented in local_level.hpp, kept separate so
// the oracle shares no code with the model it checks.
struct LocalLevelParams {
  double a0 = 0.0;
  double P0 = 10.0;
  double mu0 = 0.0;
  double V_mu = 1.0;
  double sigma_u2 = 0.5;
  double sigma_e2 = 1.0;
};

// Exact log p(y) from the dense covariance
// P0 + t s V_mu + min(t, s) sigma_u2 + [t = s] sigma_e2 and mean a0 + t mu0.
double analytic_local_level_ml(const Eigen::VectorXd& y, const LocalLevelParams& m);
// Same quantity from a Kalman filter on the augmented state (tau, mu).
double kalman_local_level_ml(const Eigen::VectorXd& y, const LocalLevelParams& m);

// Adaptive Gauss-Kronrod quadrature on (a, b); either bound may be infinite.
// Throws std::runtime_error if the error estimate exceeds tol.
double quadrature_1d(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

}  // namespace smuciv::oracle
