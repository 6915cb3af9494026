#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace smuciv {

using Matrix3 = Eigen::Matrix3d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix7 = Eigen::Matrix<double, 7, 7>;
using Vector7 = Eigen::Matrix<double, 7, 1>;
using Mask7 = Eigen::Matrix<bool, 7, 7>;

// Number of observable series (g, pi, r) and of the augmented state (trend,
// cycle, instrument).
inline constexpr int kObs = 3;
inline constexpr int kAug = 7;
inline constexpr int kTau0 = 4;     // (g*_{-1}, g*_0, pi*_0, r*_0)
inline constexpr int kPerPeriod = 7;  // (tau_t, y_t) in the interleaved order
inline constexpr int kShockMp = 5;  // zero-based index of the policy shock

// Restriction variants used for model comparison.
enum class Variant { Baseline, R1, R2, R3, R4 };

std::string to_string(Variant v);
Variant parse_variant(std::string_view name);

struct PriorConfig {
  double V_b = 0.01;
  Matrix6 b_mean = default_b_mean();
  double V_beta = 1.0;
  double beta0 = 0.0;
  double V_alpha = 1.0;
  double alpha0 = 0.0;
  Eigen::Vector4d tau00_mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d V_tau00 = 100.0 * Eigen::Matrix4d::Identity();
  Eigen::Vector3d sigma_sq = Eigen::Vector3d::Ones();

  // 0.1 on the trend diagonal, 1 on the cycle diagonal, 0 elsewhere.
  static Matrix6 default_b_mean();
  void validate() const;
};

struct ModelSpec {
  int p = 4;
  int n_obs = kObs;
  Variant variant = Variant::Baseline;
  PriorConfig prior;

  void validate() const;
  // The trend block always needs two lags (g* is I(2)), so the augmented
  // system carries max(p, 2) lag matrices.
  int lag_count() const { return p > 2 ? p : 2; }
  int n_phi() const { return 9 * p; }
};

struct ParameterDraw {
  std::vector<Matrix3> Phi;  // Phi_1 ... Phi_p
  Matrix6 B = Matrix6::Identity();
  double beta = 0.0;
  double alpha = 1.0;
  double kappa1 = 0.5;
  double kappa2 = 0.5;
  // (g*_{-1}, g*_0, pi*_0, r*_0, then (g*_t, pi*_t, r*_t) for t = 1..T)
  Eigen::VectorXd tau;
};

struct StructuralMatrices {
  std::vector<Matrix7> A_tilde;  // lag_count() matrices
  Matrix7 B_tilde;
  Matrix7 Sigma_tilde;
  Matrix3 Psi1;
  Matrix3 Psi2;
};

// Free elements of B-tilde under a variant. Row/column 7 holds beta at
// (6, 5) and alpha at (6, 6).
Mask7 restriction_mask(Variant v);
int free_count(Variant v);
bool beta_free(Variant v);

// Throws ConfigError naming the first pinned entry that is not exactly zero,
// or a non-positive alpha.
void check_restrictions(Variant v, const ParameterDraw& draw);

Matrix7 impact_tilde(const Matrix6& B, double beta, double alpha);

StructuralMatrices assemble_structural(const ModelSpec& spec, const ParameterDraw& draw);

// Free impact parameters in column-major mask order; alpha is always last.
Eigen::VectorXd pack_impact(Variant v, const Matrix6& B, double beta, double alpha);
void unpack_impact(Variant v, const Eigen::VectorXd& x, Matrix6& B, double& beta, double& alpha);

// Trend-to-cycle map of one period: eta_t = Q (tau_t', y_t')'.
Matrix7 q_matrix();
// Loading of the initial states on period t (only t = 1, 2 are nonzero).
Eigen::Matrix<double, 7, 4> xi_block(int t);

// phi = vec((Phi_1, ..., Phi_p)'); element (l, i, j) sits at i*3p + 3l + j.
int phi_index(int p, int lag, int i, int j);
Eigen::VectorXd phi_vec(const std::vector<Matrix3>& Phi);
std::vector<Matrix3> phi_unvec(const Eigen::VectorXd& phi, int p);
// Minnesota prior variances V_{phi,l,i,j} in phi_vec order.
Eigen::VectorXd phi_prior_variance(int p, double kappa1, double kappa2,
                                   const Eigen::Vector3d& sigma_sq);

// Scaled squared deviations summed over own lags (first) and cross lags
// (second); these are the inverse-gamma scales before the factor 1/2.
struct ShrinkageSums {
  double own = 0.0;
  double cross = 0.0;
};
ShrinkageSums shrinkage_sums(const std::vector<Matrix3>& Phi, const Eigen::Vector3d& sigma_sq);

// eta-tilde path (7 x T) implied by a state path and data y stacked as
// (g_t, pi_t, r_t, m_t) per period.
Eigen::MatrixXd eta_path(const Eigen::VectorXd& tau, const Eigen::VectorXd& y, int T);

// Reduced-form residuals u_t = eta_t - sum_i A_i eta_{t-i} - Xi_t tau0, with
// zero pre-sample cycles (7 x T).
Eigen::MatrixXd structural_residuals(const StructuralMatrices& mats, const Eigen::VectorXd& tau,
                                     const Eigen::VectorXd& y, int T);

// Spectral radius of the companion matrix of the cycle VAR.
double cycle_spectral_radius(const std::vector<Matrix3>& Phi);

}  // namespace smuciv
