#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smuciv/mcmc.hpp"
#include "smuciv/rng.hpp"

namespace smuciv {

// Gaussian N(mean, cov) restricted to the ellipsoid
// (x - mean)' cov^{-1} (x - mean) < chi2_{level, dim}. Its mass under the
// untruncated Gaussian is exactly `level`.
class TruncatedGaussian {
 public:
  TruncatedGaussian() = default;
  TruncatedGaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov, double level = 0.95);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  double threshold() const { return threshold_; }
  double level() const { return level_; }

  double mahalanobis(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x) const { return mahalanobis(x) < threshold_; }
  // -inf outside the region.
  double log_density(const Eigen::VectorXd& x) const;
  // Rejection from the untruncated Gaussian.
  Eigen::VectorXd sample(Rng& rng) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;  // lower factor
  double log_det_ = 0.0;
  double threshold_ = 0.0;
  double level_ = 0.95;
};

// N(mean, sd^2) restricted to (0, w) where w is chosen so the untruncated
// mass of (0, w) equals `level`. If the mass of (0, inf) is already below
// `level`, w is infinite and the density is the positive-part normal.
class PositiveTruncatedNormal {
 public:
  PositiveTruncatedNormal() = default;
  PositiveTruncatedNormal(double mean, double sd, double level = 0.95);

  double upper() const { return w_; }
  double log_mass() const { return log_mass_; }
  bool contains(double x) const { return x > 0 && x < w_; }
  double log_density(double x) const;

 private:
  double mean_ = 0.0;
  double sd_ = 1.0;
  double w_ = 0.0;
  double log_mass_ = 0.0;
};

// Bisection for w in Ncdf((w - mean)/sd) - Ncdf(-mean/sd) = level, to an
// absolute tolerance of 1e-12 on w. Returns +inf when no solution exists.
double solve_alpha_upper(double mean, double sd, double level = 0.95);

// Adds 1e-8 trace/dim to the diagonal when the smallest eigenvalue is below
// 1e-10 trace/dim.
Eigen::MatrixXd regularize_covariance(const Eigen::MatrixXd& cov);

// q(Phi, B, alpha, beta) built from posterior moments.
struct TuningDensity {
  Variant variant = Variant::Baseline;
  int p = 0;
  TruncatedGaussian q_phi;
  TruncatedGaussian q_b;  // free entries of B in column-major mask order
  bool has_beta = false;
  TruncatedGaussian q_beta;
  PositiveTruncatedNormal q_alpha;

  double log_density(const ParameterDraw& d) const;
  // Name of the first region the draw falls outside of, or empty.
  std::string violated_region(const ParameterDraw& d) const;
};

Eigen::VectorXd free_b_vector(Variant v, const Matrix6& B);

TuningDensity build_tuning(const PosteriorChain& chain, std::size_t min_draws = 1000);

// log p(y | Phi, B, beta, alpha) with tau integrated out.
double log_integrated_likelihood(const ParameterDraw& d, const ModelSpec& spec,
                                 const Eigen::VectorXd& y);

// log p(Phi) with kappa1, kappa2 integrated out over (0, 1). Throws
// DegenerateScaleError if either shrinkage sum is zero.
double log_marginal_prior_phi(const std::vector<Matrix3>& Phi, const ModelSpec& spec);
// log p(Phi | kappa1, kappa2).
double log_conditional_prior_phi(const std::vector<Matrix3>& Phi, double kappa1, double kappa2,
                                 const ModelSpec& spec);

enum class Estimator { GD, CMGD };
std::string to_string(Estimator e);

struct MarglikResult {
  double log_ml = 0.0;
  double mc_se = 0.0;
  std::size_t n_draws = 0;
  std::size_t n_zero_weight = 0;  // draws outside the tuning support
  Estimator estimator = Estimator::CMGD;
};

// Combines per-draw log q / (likelihood x prior) terms: log p(y) is minus the
// log of their mean. The standard error comes from `batches` batch means and
// the delta method. Draws with weight -inf count as zeros.
MarglikResult harmonic_mean_estimate(const std::vector<double>& log_terms, int batches = 20);

// CMGD uses p(y | Phi, B, beta, alpha) and p(Phi); GD conditions on tau and
// kappa as well and needs T <= 40. The tuning density used for each half of
// the chain is fitted on the other half; scoring draws with a q fitted on
// themselves biases log p(y) downwards by roughly dim^2 / n.
MarglikResult estimate_ml(const PosteriorChain& chain, const Eigen::VectorXd& y, Estimator estimator);

inline constexpr int kGdMaxT = 40;
inline constexpr std::size_t kMinTuningDraws = 1000;

struct CompareRow {
  std::string variant;
  MarglikResult result;
};

// variant,log_ml,mc_se,rank with rank 1 for the largest log-ML.
std::string compare_csv(const std::vector<CompareRow>& rows);

}  // namespace smuciv
