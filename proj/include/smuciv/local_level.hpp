#pragma once

#include <vector>

#include <Eigen/Dense>

#include "smuciv/gaussian_system.hpp"
#include "smuciv/marglik.hpp"
#include "smuciv/rng.hpp"

namespace smuciv {

// Univariate local level with drift:
//   tau_t = tau_{t-1} + mu + u_t,  u_t ~ N(0, sigma_u2)
//   y_t   = tau_t + e_t,           e_t ~ N(0, sigma_e2)
// with tau_0 ~ N(a0, P0), mu ~ N(mu0, V_mu) and known variances. The drift is
// the only parameter left after tau is integrated out.
struct LocalLevelModel {
  double a0 = 0.0;
  double P0 = 10.0;
  double mu0 = 0.0;
  double V_mu = 1.0;
  double sigma_u2 = 0.5;
  double sigma_e2 = 1.0;
};

// (tau_0, tau_1, y_1, ..., tau_T, y_T) given mu; half-bandwidth 2.
JointGaussian local_level_joint(const LocalLevelModel& m, double mu, int T);

// log p(y | mu) with the states integrated out.
double local_level_log_likelihood(const LocalLevelModel& m, const Eigen::VectorXd& y, double mu);
// log p(y, tau | mu); tau = (tau_0, ..., tau_T).
double local_level_log_joint(const LocalLevelModel& m, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& tau, double mu);

struct LocalLevelSample {
  double mu = 0.0;
  Eigen::VectorXd tau;
  Eigen::VectorXd y;
};
LocalLevelSample simulate_local_level(const LocalLevelModel& m, int T, Rng& rng);

struct LocalLevelChain {
  std::vector<double> mu;
  std::vector<Eigen::VectorXd> tau;
};
// Gibbs: tau | mu, y by precision sampling, then mu | tau.
LocalLevelChain local_level_gibbs(const LocalLevelModel& m, const Eigen::VectorXd& y, int n_burn,
                                  int n_keep, Rng& rng);

MarglikResult local_level_ml(const LocalLevelModel& m, const Eigen::VectorXd& y,
                             const LocalLevelChain& chain, Estimator estimator);

}  // namespace smuciv
