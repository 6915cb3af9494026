#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "smuciv/data_io.hpp"
#include "smuciv/model.hpp"
#include "smuciv/rng.hpp"

namespace smuciv {

struct SamplerConfig {
  int n_burn = 20000;
  int n_keep = 20000;
  int thin = 1;
  std::uint64_t seed = 1;
  int chain_index = 0;
  double mh_target_accept = 0.30;
  int adapt_until = -1;  // negative: adapt during burn-in only
  int mh_steps = 10;     // random-walk proposals per sweep for the impact block

  void validate() const;
  int adaptation_end() const { return adapt_until < 0 ? n_burn : adapt_until; }
};

struct PosteriorChain {
  ModelSpec spec;
  SamplerConfig config;
  int T = 0;
  std::vector<ParameterDraw> draws;
  std::vector<double> spectral_radius;  // cycle companion, per kept draw
  double accept_rate_B = 0.0;
  std::int64_t impact_singular_rejections = 0;
};

// Random-walk Metropolis with reflection of one coordinate at zero. The
// proposal covariance and a global scale adapt (Robbins-Monro on the log
// scale toward the target acceptance rate; empirical covariance refreshed
// every 200 adaptive steps) only when the caller says so.
class AdaptiveRwm {
 public:
  AdaptiveRwm() = default;
  AdaptiveRwm(const Eigen::VectorXd& initial_sd, double target_accept, int reflect_index = -1);

  // One proposal. Returns true on acceptance. A proposal whose log target is
  // not finite is rejected and counted.
  bool step(Eigen::VectorXd& x, double& log_target_x,
            const std::function<double(const Eigen::VectorXd&)>& log_target, Rng& rng, bool adapt);

  int dim() const { return static_cast<int>(chol_.rows()); }
  double log_scale() const { return log_scale_; }
  std::int64_t proposals() const { return proposals_; }
  std::int64_t accepted() const { return accepted_; }
  std::int64_t rejected_infinite() const { return rejected_infinite_; }
  void reset_counters();

  // x' = x + exp(log_scale) L e, then |x'_r| for the reflected coordinate.
  Eigen::VectorXd propose(const Eigen::VectorXd& x, Rng& rng) const;

 private:
  void adapt_to(const Eigen::VectorXd& x, bool accepted);

  Eigen::MatrixXd chol_;
  double log_scale_ = 0.0;
  double target_ = 0.3;
  int reflect_ = -1;
  std::int64_t proposals_ = 0;
  std::int64_t accepted_ = 0;
  std::int64_t rejected_infinite_ = 0;
  std::int64_t adapt_steps_ = 0;
  Eigen::VectorXd run_mean_;
  Eigen::MatrixXd run_m2_;
  std::int64_t run_n_ = 0;
  bool empirical_ = false;
};

// log N(u_t; 0, B B') summed over the columns of u, given S = sum_t u_t u_t'.
// Returns -inf when B is singular.
double impact_log_likelihood(const Eigen::MatrixXd& B, const Eigen::MatrixXd& S, int T);

// Log prior of the free impact elements: Gaussian for B and beta, Gaussian
// truncated to alpha > 0 (normalizer included).
double log_prior_impact(const ModelSpec& spec, const Matrix6& B, double beta, double alpha);

// Step 1: tau | B, beta, alpha, Phi, y.
Eigen::VectorXd step_states(const ParameterDraw& draw, const Eigen::VectorXd& y,
                            const ModelSpec& spec, Rng& rng);

struct ImpactUpdate {
  Matrix6 B;
  double beta = 0.0;
  double alpha = 1.0;
  bool accepted = false;
};

// Step 2 as three conditional moves: `steps` random-walk proposals on the
// free elements of B given (beta, alpha), then beta | B, alpha (Gaussian,
// when free) and alpha | B, beta (slice sampler).
ImpactUpdate step_impact(const ParameterDraw& draw, const Eigen::VectorXd& y, const ModelSpec& spec,
                         AdaptiveRwm& kernel, Rng& rng, bool adapt, int steps = 1);

// beta | rest: Gaussian regression of m's innovation e on the policy shock.
double draw_beta(const Eigen::VectorXd& eps_mp, const Eigen::VectorXd& e, double alpha,
                 const PriorConfig& prior, Rng& rng);
// log p(alpha | rest) up to a constant; ssr = sum (e - beta eps_mp)^2.
double log_alpha_conditional(double alpha, double ssr, int T, const PriorConfig& prior);
double draw_alpha(double ssr, int T, const PriorConfig& prior, double current, Rng& rng);
// Univariate slice sampler with stepping out and shrinkage.
double slice_sample(const std::function<double(double)>& log_f, double x0, double w, Rng& rng,
                    int max_steps_out = 50);

// Step 3: Phi | tau, B, beta, alpha, kappa, y (GLS conjugate update).
// Precision is root' * root with root upper triangular.
struct PhiConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd root;
};
PhiConditional phi_conditional(const ParameterDraw& draw, const Eigen::VectorXd& y,
                               const ModelSpec& spec);
std::vector<Matrix3> step_phi(const ParameterDraw& draw, const Eigen::VectorXd& y,
                              const ModelSpec& spec, Rng& rng);

// Steps 4 and 5: which = 1 (own lags) or 2 (cross lags).
double step_kappa(const ParameterDraw& draw, int which, const ModelSpec& spec, Rng& rng);

// Inverse-gamma(shape, scale) truncated to (0, 1).
double truncated_inv_gamma_draw(double shape, double scale, Rng& rng);
double truncated_inv_gamma_cdf(double x, double shape, double scale);
double kappa_shape(int p, int which);

// Initial state of the chain: prior means for B, beta, alpha; Phi = 0.
ParameterDraw initial_draw(const ModelSpec& spec);
// (Phi, B, beta, alpha, kappa) from the prior; tau is left empty.
ParameterDraw draw_from_prior(const ModelSpec& spec, Rng& rng);
// Initial states and (tau, y) jointly from p(tau, y | parameters).
void draw_states_and_data(const ModelSpec& spec, ParameterDraw& draw, int T, Rng& rng,
                          Eigen::VectorXd& y);
// y | tau and parameters.
Eigen::VectorXd draw_data_given_states(const ModelSpec& spec, const ParameterDraw& draw, int T,
                                       Rng& rng);

// Full Gibbs sweep in the order tau, (B, beta, alpha), Phi, kappa1, kappa2.
class GibbsSampler {
 public:
  GibbsSampler(ModelSpec spec, SamplerConfig config);

  void sweep(ParameterDraw& draw, const Eigen::VectorXd& y, Rng& rng, bool adapt);
  const AdaptiveRwm& impact_kernel() const { return kernel_; }
  AdaptiveRwm& impact_kernel() { return kernel_; }
  const ModelSpec& spec() const { return spec_; }

 private:
  ModelSpec spec_;
  SamplerConfig config_;
  AdaptiveRwm kernel_;
};

PosteriorChain run_chain(const ModelSpec& spec, const Dataset& data, const SamplerConfig& config);
PosteriorChain run_chain(const ModelSpec& spec, const Eigen::VectorXd& y, int T,
                         const SamplerConfig& config);

// Least-squares AR(p) with intercept for g, pi and r; residual variances.
Eigen::Vector3d fit_ar_residual_variances(const Dataset& data, int p);
double ar_residual_variance(const Eigen::VectorXd& series, int p);

// Prior hyperparameters that depend on the sample: tau00 = (g1, g1, pi1, r1),
// beta0 = 0.5 sd(m), sigma_sq from AR(p) residual variances.
PriorConfig data_prior(const Dataset& data, int p, PriorConfig base = {});

}  // namespace smuciv
