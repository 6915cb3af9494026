#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "smuciv/banded.hpp"
#include "smuciv/model.hpp"
#include "smuciv/rng.hpp"

namespace smuciv {

// A Gaussian vector z ~ N(mean, precision^{-1}) whose entries split into a
// latent block and an observed block through index sets. The precision is
// kept in z-order, where it is banded; the (latent, observed) partition is
// never materialized as a permutation.
struct JointGaussian {
  SymBandMatrix precision;
  Eigen::VectorXd mean;
  std::vector<int> latent_index;    // z positions of the latent block, in latent order
  std::vector<int> observed_index;  // z positions of the observed block, in observed order
  std::optional<double> log_det_precision;

  // Mean in (latent', observed')' order.
  Eigen::VectorXd partitioned_mean() const;
  Eigen::VectorXd latent_mean() const;
  Eigen::VectorXd observed_mean() const;
};

// Joint distribution of (tau', y')' given (Phi, B, beta, alpha) together with
// the stacked-system pieces that define it.
struct GaussianSystem {
  int T = 0;
  int p = 0;
  int lags = 0;
  StructuralMatrices mats;
  Eigen::Vector4d tau00_mean;
  Eigen::Matrix4d V_tau00;
  JointGaussian joint;
  int bandwidth_bound = 0;  // asserted bound on the z-order half-bandwidth

  // The matrices of the stacked representation, assembled on demand.
  Eigen::SparseMatrix<double> h1() const;     // 7T x 7T
  Eigen::SparseMatrix<double> xi() const;     // 7T x 4
  Eigen::SparseMatrix<double> h2() const;     // (4+7T) x (4+7T)
  Eigen::SparseMatrix<double> h() const;      // H2 diag(I_4, I_T (x) Q)
  Eigen::SparseMatrix<double> omega() const;  // diag(V_tau00, I_T (x) Sigma-tilde)
  Matrix7 q() const { return q_matrix(); }
  // tau-tilde = (tau00', 0, ..., 0)'.
  Eigen::VectorXd tau_tilde() const;
};

// z-order positions: tau0 occupies 0..3; period t (1-based) holds tau_t at
// 4 + 7(t-1) + {0,1,2} and y_t at 4 + 7(t-1) + {3,4,5,6}.
int z_tau0_index(int k);
int z_tau_index(int t, int k);
int z_y_index(int t, int k);

// Half-bandwidth bound of K_z: 7 (lags + 1) + 3 with lags = max(p, 2).
int precision_bandwidth_bound(int p);

GaussianSystem build_joint(const ModelSpec& spec, const StructuralMatrices& mats,
                           const PriorConfig& prior, int T);

// Gaussian given by its mean and banded precision; the Cholesky factor is
// computed once at construction.
class ConditionalGaussian {
 public:
  ConditionalGaussian(Eigen::VectorXd mean, SymBandMatrix precision);
  ConditionalGaussian(Eigen::VectorXd mean, SymBandMatrix precision, BandCholesky factor);

  const Eigen::VectorXd& mean() const { return mean_; }
  const SymBandMatrix& precision() const { return precision_; }
  const BandCholesky& factor() const { return factor_; }
  int bandwidth() const { return precision_.bandwidth(); }

  // mean + L'^{-1} e with e standard normal.
  Eigen::VectorXd sample(Rng& rng) const;

 private:
  Eigen::VectorXd mean_;
  SymBandMatrix precision_;
  BandCholesky factor_;
};

// Latent | observed = y.
ConditionalGaussian condition_on_data(const JointGaussian& jg, const Eigen::VectorXd& y);
// Observed | latent = x. Used to regenerate data given states.
ConditionalGaussian condition_on_latent(const JointGaussian& jg, const Eigen::VectorXd& x);

// Marginal of the observed block. The log-density uses the Schur complement
// K_y - K_{tau,y}' K_tau^{-1} K_{tau,y} through banded solves and never forms
// the dense covariance.
class MarginalY {
 public:
  explicit MarginalY(const JointGaussian& jg);

  const Eigen::VectorXd& mean() const { return mu_y_; }
  // log |Lambda_y^{-1}|
  double log_det_precision() const { return log_det_schur_; }
  double log_density(const Eigen::VectorXd& y) const;

 private:
  Eigen::VectorXd mu_y_;
  SymBandMatrix k_y_;
  std::optional<BandCholesky> k_tau_factor_;
  Eigen::SparseMatrix<double> k_tau_y_;
  double log_det_schur_ = 0.0;
};

MarginalY marginal_of_y(const JointGaussian& jg);

// Sub-block K[idx, idx] as a banded matrix in idx order.
SymBandMatrix extract_band_block(const SymBandMatrix& K, const std::vector<int>& idx);
// K[rows, cols] as a sparse matrix.
Eigen::SparseMatrix<double> extract_cross_block(const SymBandMatrix& K, const std::vector<int>& rows,
                                                const std::vector<int>& cols);

}  // namespace smuciv
