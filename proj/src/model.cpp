#include "smuciv/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "smuciv/errors.hpp"

namespace smuciv {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::R1: return "R1";
    case Variant::R2: return "R2";
    case Variant::R3: return "R3";
    case Variant::R4: return "R4";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "baseline" || s == "smuc-iv") return Variant::Baseline;
  if (s == "r1" || s == "smuc-iv-r1") return Variant::R1;
  if (s == "r2" || s == "smuc-iv-r2") return Variant::R2;
  if (s == "r3" || s == "smuc-iv-r3") return Variant::R3;
  if (s == "r4" || s == "smuc-iv-r4") return Variant::R4;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

Matrix6 PriorConfig::default_b_mean() {
  Matrix6 b = Matrix6::Zero();
  for (int i = 0; i < 3; ++i) b(i, i) = 0.1;
  for (int i = 3; i < 6; ++i) b(i, i) = 1.0;
  return b;
}

void PriorConfig::validate() const {
  if (!(V_b > 0) || !(V_beta > 0) || !(V_alpha > 0))
    throw ConfigError("prior variances must be strictly positive");
  if (!(sigma_sq.array() > 0).all()) throw ConfigError("sigma_sq entries must be strictly positive");
  Eigen::LLT<Eigen::Matrix4d> llt(V_tau00);
  if (llt.info() != Eigen::Success || !V_tau00.isApprox(V_tau00.transpose()))
    throw ConfigError("V_tau00 must be symmetric positive definite");
  if (!b_mean.allFinite() || !tau00_mean.allFinite() || !std::isfinite(beta0) ||
      !std::isfinite(alpha0))
    throw ConfigError("prior means must be finite");
}

void ModelSpec::validate() const {
  if (p < 1) throw ConfigError("lag order p must be >= 1");
  if (n_obs != kObs) throw ConfigError("only three observable series are supported");
  prior.validate();
}

Mask7 restriction_mask(Variant v) {
  Mask7 m = Mask7::Constant(false);
  m.topLeftCorner<6, 6>().setConstant(true);
  m(6, 5) = true;  // beta
  m(6, 6) = true;  // alpha
  switch (v) {
    case Variant::Baseline:
      break;
    case Variant::R1:
      for (int i = 0; i < 3; ++i) m(i, 5) = false;
      break;
    case Variant::R2:
      m(6, 5) = false;
      break;
    case Variant::R3:
      m.block<3, 3>(0, 3).setConstant(false);
      m.block<3, 3>(3, 0).setConstant(false);
      m(6, 5) = false;
      break;
    case Variant::R4:
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
          if (i != j) m(i, j) = false;
      m(6, 5) = false;
      break;
  }
  return m;
}

int free_count(Variant v) { return static_cast<int>(restriction_mask(v).count()); }

bool beta_free(Variant v) { return restriction_mask(v)(6, 5); }

void check_restrictions(Variant v, const ParameterDraw& draw) {
  const Mask7 m = restriction_mask(v);
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i)
      if (!m(i, j) && draw.B(i, j) != 0.0) {
        std::ostringstream os;
        os << "variant " << to_string(v) << " pins B(" << i + 1 << "," << j + 1
           << ") to zero but the draw has " << draw.B(i, j);
        throw ConfigError(os.str());
      }
  if (!m(6, 5) && draw.beta != 0.0)
    throw ConfigError("variant " + to_string(v) + " pins beta to zero");
  if (!(draw.alpha > 0.0)) throw ConfigError("alpha must be strictly positive");
}

Matrix7 impact_tilde(const Matrix6& B, double beta, double alpha) {
  Matrix7 bt = Matrix7::Zero();
  bt.topLeftCorner<6, 6>() = B;
  bt(6, 5) = beta;
  bt(6, 6) = alpha;
  return bt;
}

StructuralMatrices assemble_structural(const ModelSpec& spec, const ParameterDraw& draw) {
  if (static_cast<int>(draw.Phi.size()) != spec.p)
    throw ConfigError("draw carries " + std::to_string(draw.Phi.size()) +
                      " Phi matrices, spec has p = " + std::to_string(spec.p));
  check_restrictions(spec.variant, draw);

  StructuralMatrices mats;
  mats.Psi1 = Eigen::Vector3d(2.0, 1.0, 1.0).asDiagonal();
  mats.Psi2 = Eigen::Vector3d(-1.0, 0.0, 0.0).asDiagonal();

  const int L = spec.lag_count();
  mats.A_tilde.assign(L, Matrix7::Zero());
  mats.A_tilde[0].topLeftCorner<3, 3>() = mats.Psi1;
  mats.A_tilde[1].topLeftCorner<3, 3>() = mats.Psi2;
  for (int l = 0; l < spec.p; ++l) mats.A_tilde[l].block<3, 3>(3, 3) = draw.Phi[l];

  mats.B_tilde = impact_tilde(draw.B, draw.beta, draw.alpha);
  mats.Sigma_tilde = mats.B_tilde * mats.B_tilde.transpose();
  return mats;
}

Eigen::VectorXd pack_impact(Variant v, const Matrix6& B, double beta, double alpha) {
  const Mask7 m = restriction_mask(v);
  Eigen::VectorXd x(m.count());
  const Matrix7 bt = impact_tilde(B, beta, alpha);
  int k = 0;
  for (int j = 0; j < 7; ++j)
    for (int i = 0; i < 7; ++i)
      if (m(i, j)) x(k++) = bt(i, j);
  return x;
}

void unpack_impact(Variant v, const Eigen::VectorXd& x, Matrix6& B, double& beta, double& alpha) {
  const Mask7 m = restriction_mask(v);
  if (x.size() != m.count()) throw ConfigError("impact vector has the wrong length");
  Matrix7 bt = Matrix7::Zero();
  int k = 0;
  for (int j = 0; j < 7; ++j)
    for (int i = 0; i < 7; ++i)
      if (m(i, j)) bt(i, j) = x(k++);
  B = bt.topLeftCorner<6, 6>();
  beta = bt(6, 5);
  alpha = bt(6, 6);
}

Matrix7 q_matrix() {
  Matrix7 q = Matrix7::Identity();
  q(3, 0) = -1.0;
  q(4, 1) = -1.0;
  q(5, 1) = -1.0;
  q(5, 2) = -1.0;
  return q;
}

Eigen::Matrix<double, 7, 4> xi_block(int t) {
  Eigen::Matrix<double, 7, 4> xi = Eigen::Matrix<double, 7, 4>::Zero();
  if (t == 1) {
    xi(0, 0) = -1.0;
    xi(0, 1) = 2.0;
    xi(1, 2) = 1.0;
    xi(2, 3) = 1.0;
  } else if (t == 2) {
    xi(0, 1) = -1.0;
  }
  return xi;
}

int phi_index(int p, int lag, int i, int j) { return i * 3 * p + 3 * lag + j; }

Eigen::VectorXd phi_vec(const std::vector<Matrix3>& Phi) {
  const int p = static_cast<int>(Phi.size());
  Eigen::VectorXd v(9 * p);
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < p; ++l)
      for (int j = 0; j < 3; ++j) v(phi_index(p, l, i, j)) = Phi[l](i, j);
  return v;
}

std::vector<Matrix3> phi_unvec(const Eigen::VectorXd& phi, int p) {
  if (phi.size() != 9 * p) throw ConfigError("phi vector has the wrong length");
  std::vector<Matrix3> Phi(p, Matrix3::Zero());
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < p; ++l)
      for (int j = 0; j < 3; ++j) Phi[l](i, j) = phi(phi_index(p, l, i, j));
  return Phi;
}

Eigen::VectorXd phi_prior_variance(int p, double kappa1, double kappa2,
                                   const Eigen::Vector3d& sigma_sq) {
  Eigen::VectorXd v(9 * p);
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < p; ++l)
      for (int j = 0; j < 3; ++j) {
        const double l2 = static_cast<double>((l + 1) * (l + 1));
        v(phi_index(p, l, i, j)) =
            i == j ? kappa1 / l2 : kappa2 * sigma_sq(i) / (l2 * sigma_sq(j));
      }
  return v;
}

ShrinkageSums shrinkage_sums(const std::vector<Matrix3>& Phi, const Eigen::Vector3d& sigma_sq) {
  ShrinkageSums s;
  for (std::size_t l = 0; l < Phi.size(); ++l) {
    const double l2 = static_cast<double>((l + 1) * (l + 1));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double d2 = Phi[l](i, j) * Phi[l](i, j);
        if (i == j)
          s.own += l2 * d2;
        else
          s.cross += sigma_sq(j) / sigma_sq(i) * l2 * d2;
      }
  }
  return s;
}

Eigen::MatrixXd eta_path(const Eigen::VectorXd& tau, const Eigen::VectorXd& y, int T) {
  if (tau.size() != kTau0 + 3 * T || y.size() != 4 * T)
    throw ConfigError("state path or data length does not match T");
  Eigen::MatrixXd eta(7, T);
  for (int t = 0; t < T; ++t) {
    const double gs = tau(kTau0 + 3 * t), ps = tau(kTau0 + 3 * t + 1), rs = tau(kTau0 + 3 * t + 2);
    eta(0, t) = gs;
    eta(1, t) = ps;
    eta(2, t) = rs;
    eta(3, t) = y(4 * t) - gs;
    eta(4, t) = y(4 * t + 1) - ps;
    eta(5, t) = y(4 * t + 2) - ps - rs;
    eta(6, t) = y(4 * t + 3);
  }
  return eta;
}

Eigen::MatrixXd structural_residuals(const StructuralMatrices& mats, const Eigen::VectorXd& tau,
                                     const Eigen::VectorXd& y, int T) {
  const Eigen::MatrixXd eta = eta_path(tau, y, T);
  const Eigen::Vector4d tau0 = tau.head<4>();
  const int L = static_cast<int>(mats.A_tilde.size());
  Eigen::MatrixXd u(7, T);
  for (int t = 0; t < T; ++t) {
    Vector7 r = eta.col(t);
    for (int i = 1; i <= L && t - i >= 0; ++i) r.noalias() -= mats.A_tilde[i - 1] * eta.col(t - i);
    if (t < 2) r.noalias() -= xi_block(t + 1) * tau0;
    u.col(t) = r;
  }
  return u;
}

double cycle_spectral_radius(const std::vector<Matrix3>& Phi) {
  const int p = static_cast<int>(Phi.size());
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(3 * p, 3 * p);
  for (int l = 0; l < p; ++l) comp.block(0, 3 * l, 3, 3) = Phi[l];
  if (p > 1) comp.block(3, 0, 3 * (p - 1), 3 * (p - 1)).setIdentity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace smuciv
