#include "smuciv/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "smuciv/errors.hpp"
#include "smuciv/gaussian_system.hpp"

namespace smuciv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

int periods_of(const Eigen::VectorXd& y) {
  if (y.size() % 4 != 0) throw ConfigError("stacked data length must be a multiple of 4");
  return static_cast<int>(y.size() / 4);
}

double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

// Positive part of N(mean, var) by inversion, with an exponential-tail
// rejection sampler when almost all mass sits below zero.
double positive_normal_draw(double mean, double var, Rng& rng) {
  const double sd = std::sqrt(var);
  const double a = -mean / sd;  // standardized lower bound
  double z;
  if (a < 5.0) {
    const boost::math::normal_distribution<double> nd;
    const double lo = boost::math::cdf(nd, a);
    const double u = lo + (1.0 - lo) * uniform01(rng);
    z = u < 1.0 ? boost::math::quantile(nd, u) : a;
    if (z <= a) z = std::nextafter(a, std::numeric_limits<double>::infinity());
  } else {
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      z = a + exponential(rng) / lambda;
      const double d = z - lambda;
      if (std::log(uniform01(rng)) <= -0.5 * d * d) break;
    }
  }
  return std::max(mean + sd * z, std::numeric_limits<double>::min());
}

Eigen::VectorXd pack_b(Variant v, const Matrix6& B) {
  const Mask7 m = restriction_mask(v);
  Eigen::VectorXd x(m.topLeftCorner<6, 6>().count());
  int k = 0;
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i)
      if (m(i, j)) x(k++) = B(i, j);
  return x;
}

Matrix6 unpack_b(Variant v, const Eigen::VectorXd& x) {
  const Mask7 m = restriction_mask(v);
  Matrix6 B = Matrix6::Zero();
  int k = 0;
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i)
      if (m(i, j)) B(i, j) = x(k++);
  return B;
}

Eigen::MatrixXd residual_cross_product(const Eigen::MatrixXd& u) { return u * u.transpose(); }

// eta-bar: trend differences, cycles and instrument. Equal to the structural
// residuals with the cycle VAR switched off.
Eigen::MatrixXd eta_bar(const ModelSpec& spec, const ParameterDraw& draw, const Eigen::VectorXd& y,
                        int T) {
  ParameterDraw zero = draw;
  zero.Phi.assign(spec.p, Matrix3::Zero());
  const StructuralMatrices mats = assemble_structural(spec, zero);
  return structural_residuals(mats, draw.tau, y, T);
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_burn < 0) throw ConfigError("n_burn must be >= 0");
  if (n_keep < 1) throw ConfigError("n_keep must be >= 1");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (!(mh_target_accept > 0.0 && mh_target_accept < 1.0))
    throw ConfigError("mh_target_accept must lie in (0, 1)");
  if (mh_steps < 1) throw ConfigError("mh_steps must be >= 1");
}

// ---------------------------------------------------------------------------
// Adaptive random-walk Metropolis

AdaptiveRwm::AdaptiveRwm(const Eigen::VectorXd& initial_sd, double target_accept,
                         int reflect_index)
    : chol_(initial_sd.asDiagonal()), target_(target_accept), reflect_(reflect_index) {
  if (!(initial_sd.array() > 0).all()) throw ConfigError("proposal scales must be positive");
  run_mean_ = Eigen::VectorXd::Zero(initial_sd.size());
  run_m2_ = Eigen::MatrixXd::Zero(initial_sd.size(), initial_sd.size());
}

void AdaptiveRwm::reset_counters() {
  proposals_ = 0;
  accepted_ = 0;
  rejected_infinite_ = 0;
}

Eigen::VectorXd AdaptiveRwm::propose(const Eigen::VectorXd& x, Rng& rng) const {
  Eigen::VectorXd e(x.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = standard_normal(rng);
  const Eigen::VectorXd step = chol_.triangularView<Eigen::Lower>() * e;
  Eigen::VectorXd xp = x + std::exp(log_scale_) * step;
  if (reflect_ >= 0) xp(reflect_) = std::abs(xp(reflect_));
  return xp;
}

bool AdaptiveRwm::step(Eigen::VectorXd& x, double& log_target_x,
                       const std::function<double(const Eigen::VectorXd&)>& log_target, Rng& rng,
                       bool adapt) {
  const Eigen::VectorXd xp = propose(x, rng);
  const double lp = log_target(xp);
  ++proposals_;
  bool accept = false;
  if (!std::isfinite(lp)) {
    ++rejected_infinite_;
    uniform01(rng);  // keep the stream position independent of the outcome
  } else {
    accept = std::log(uniform01(rng)) < lp - log_target_x;
  }
  if (accept) {
    x = xp;
    log_target_x = lp;
    ++accepted_;
  }
  if (adapt) adapt_to(x, accept);
  return accept;
}

void AdaptiveRwm::adapt_to(const Eigen::VectorXd& x, bool accepted) {
  ++adapt_steps_;
  const double gain = std::min(1.0, 5.0 * std::pow(static_cast<double>(adapt_steps_), -0.6));
  log_scale_ += gain * ((accepted ? 1.0 : 0.0) - target_);
  log_scale_ = std::clamp(log_scale_, -20.0, 5.0);

  ++run_n_;
  const Eigen::VectorXd delta = x - run_mean_;
  run_mean_ += delta / static_cast<double>(run_n_);
  run_m2_.noalias() += delta * (x - run_mean_).transpose();

  const int d = dim();
  if (adapt_steps_ % 200 != 0 || run_n_ < std::max<std::int64_t>(500, 20 * d)) return;
  Eigen::MatrixXd cov = run_m2_ / static_cast<double>(run_n_ - 1);
  cov = 0.5 * (cov + cov.transpose());
  if (reflect_ >= 0) {
    // Reflection keeps the proposal symmetric only if the reflected
    // coordinate is proposal-independent of the rest.
    const double v = cov(reflect_, reflect_);
    cov.row(reflect_).setZero();
    cov.col(reflect_).setZero();
    cov(reflect_, reflect_) = v;
  }
  const double avg = cov.trace() / d;
  if (!(avg > 0) || !std::isfinite(avg)) return;
  cov.diagonal().array() += 1e-10 * avg;
  Eigen::LLT<Eigen::MatrixXd> llt(cov * (2.38 * 2.38 / d));
  if (llt.info() != Eigen::Success) return;
  chol_ = llt.matrixL();
  // 2.38^2 / d is already the right size for a Gaussian target; restart the
  // global scale there the first time the empirical covariance is used.
  if (!empirical_) log_scale_ = 0.0;
  empirical_ = true;
}

// ---------------------------------------------------------------------------
// Densities

double impact_log_likelihood(const Eigen::MatrixXd& B, const Eigen::MatrixXd& S, int T) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  const double det = lu.determinant();
  if (!(std::abs(det) > 0) || !std::isfinite(det) || lu.rcond() < 1e-14) return kNegInf;
  const Eigen::MatrixXd binv_s = lu.solve(S);
  const Eigen::MatrixXd core = lu.solve(binv_s.transpose());
  const double n = static_cast<double>(B.rows());
  return -0.5 * n * T * kLog2Pi - T * std::log(std::abs(det)) - 0.5 * core.trace();
}

namespace {

// Fixed-size version of impact_log_likelihood for the inner loops.
double impact_log_likelihood7(const Matrix7& B, const Matrix7& S, int T) {
  const Eigen::PartialPivLU<Matrix7> lu(B);
  const double det = lu.determinant();
  if (!(std::abs(det) > 0) || !std::isfinite(det) || lu.rcond() < 1e-14) return kNegInf;
  const Matrix7 binv_s = lu.solve(S);
  const Matrix7 core = lu.solve(binv_s.transpose());
  return -0.5 * 7.0 * T * kLog2Pi - T * std::log(std::abs(det)) - 0.5 * core.trace();
}

}  // namespace

double log_prior_impact(const ModelSpec& spec, const Matrix6& B, double beta, double alpha) {
  if (!(alpha > 0)) return kNegInf;
  const PriorConfig& pr = spec.prior;
  const Mask7 m = restriction_mask(spec.variant);
  double lp = 0.0;
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i)
      if (m(i, j)) lp += log_normal_pdf(B(i, j), pr.b_mean(i, j), pr.V_b);
  if (m(6, 5)) lp += log_normal_pdf(beta, pr.beta0, pr.V_beta);
  const boost::math::normal_distribution<double> nd;
  const double mass = boost::math::cdf(nd, pr.alpha0 / std::sqrt(pr.V_alpha));
  lp += log_normal_pdf(alpha, pr.alpha0, pr.V_alpha) - std::log(mass);
  return lp;
}

// ---------------------------------------------------------------------------
// Gibbs steps

Eigen::VectorXd step_states(const ParameterDraw& draw, const Eigen::VectorXd& y,
                            const ModelSpec& spec, Rng& rng) {
  const int T = periods_of(y);
  const StructuralMatrices mats = assemble_structural(spec, draw);
  const GaussianSystem sys = build_joint(spec, mats, spec.prior, T);
  return condition_on_data(sys.joint, y).sample(rng);
}

ImpactUpdate step_impact(const ParameterDraw& draw, const Eigen::VectorXd& y, const ModelSpec& spec,
                         AdaptiveRwm& kernel, Rng& rng, bool adapt, int steps) {
  const int T = periods_of(y);
  const StructuralMatrices mats = assemble_structural(spec, draw);
  const Eigen::MatrixXd U = structural_residuals(mats, draw.tau, y, T);
  const Eigen::MatrixXd S = residual_cross_product(U);
  const Variant v = spec.variant;
  const double beta = draw.beta, alpha = draw.alpha;

  // B given (beta, alpha). A slice-sampling sweep over the free entries
  // adapts to the local scale, which varies by orders of magnitude when B is
  // close to singular; the random-walk steps then move along correlations.
  const Matrix7 St = S;
  auto log_target = [&](const Eigen::VectorXd& x) {
    const Matrix6 B = unpack_b(v, x);
    return impact_log_likelihood7(impact_tilde(B, beta, alpha), St, T) +
           log_prior_impact(spec, B, beta, alpha);
  };
  Eigen::VectorXd x = pack_b(v, draw.B);
  if (!std::isfinite(log_target(x)))
    throw NumericalError("current impact matrix has zero posterior density");
  const double w = std::sqrt(spec.prior.V_b);
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    x(k) = slice_sample(
        [&](double t) {
          const double keep = x(k);
          x(k) = t;
          const double f = log_target(x);
          x(k) = keep;
          return f;
        },
        x(k), w, rng, 20);
  }
  double lx = log_target(x);
  ImpactUpdate out;
  for (int s = 0; s < steps; ++s) out.accepted |= kernel.step(x, lx, log_target, rng, adapt);
  out.B = unpack_b(v, x);

  // (beta, alpha) given B: m's innovation is beta eps_mp + alpha v with
  // eps = B^{-1} u_{1:6}, a scalar regression.
  const Eigen::PartialPivLU<Matrix6> lu(out.B);
  const Eigen::VectorXd eps_mp = lu.solve(U.topRows<6>()).row(kShockMp).transpose();
  const Eigen::VectorXd e = U.row(6).transpose();
  out.beta = beta_free(v) ? draw_beta(eps_mp, e, alpha, spec.prior, rng) : 0.0;
  out.alpha = draw_alpha((e - out.beta * eps_mp).squaredNorm(), T, spec.prior, alpha, rng);
  return out;
}

double draw_beta(const Eigen::VectorXd& eps_mp, const Eigen::VectorXd& e, double alpha,
                 const PriorConfig& prior, Rng& rng) {
  const double a2 = alpha * alpha;
  const double prec = 1.0 / prior.V_beta + eps_mp.squaredNorm() / a2;
  const double mean = (prior.beta0 / prior.V_beta + eps_mp.dot(e) / a2) / prec;
  return mean + standard_normal(rng) / std::sqrt(prec);
}

double log_alpha_conditional(double alpha, double ssr, int T, const PriorConfig& prior) {
  if (!(alpha > 0)) return kNegInf;
  const double d = alpha - prior.alpha0;
  return -T * std::log(alpha) - 0.5 * ssr / (alpha * alpha) - 0.5 * d * d / prior.V_alpha;
}

double draw_alpha(double ssr, int T, const PriorConfig& prior, double current, Rng& rng) {
  // Initial slice width from the likelihood mode sqrt(ssr / T); it does not
  // depend on the current value, so the slice move stays reversible.
  const double mode = std::sqrt(std::max(ssr, 0.0) / std::max(T, 1));
  const double w = std::max(mode / std::sqrt(2.0 * std::max(T, 1)), 1e-3 * std::sqrt(prior.V_alpha));
  return slice_sample([&](double a) { return log_alpha_conditional(a, ssr, T, prior); }, current, w,
                      rng);
}

double slice_sample(const std::function<double(double)>& log_f, double x0, double w, Rng& rng,
                    int max_steps_out) {
  const double f0 = log_f(x0);
  if (!std::isfinite(f0)) throw NumericalError("slice sampler started outside the support");
  const double level = f0 - exponential(rng);
  double lo = x0 - w * uniform01(rng);
  double hi = lo + w;
  int j = static_cast<int>(std::floor(max_steps_out * uniform01(rng)));
  int k = max_steps_out - 1 - j;
  while (j-- > 0 && log_f(lo) > level) lo -= w;
  while (k-- > 0 && log_f(hi) > level) hi += w;
  for (int it = 0; it < 200; ++it) {
    const double x = lo + (hi - lo) * uniform01(rng);
    if (log_f(x) > level) return x;
    (x < x0 ? lo : hi) = x;
  }
  throw NumericalError("slice sampler failed to shrink onto the slice");
}

PhiConditional phi_conditional(const ParameterDraw& draw, const Eigen::VectorXd& y,
                               const ModelSpec& spec) {
  const int T = periods_of(y);
  const int p = spec.p;
  const int k = 3 * p;
  const Eigen::MatrixXd eb = eta_bar(spec, draw, y, T);

  // Least squares in square-root form. The normal equations square the
  // condition number, which breaks down on strongly explosive paths.
  const Matrix7 bt = impact_tilde(draw.B, draw.beta, draw.alpha);
  const Eigen::PartialPivLU<Matrix7> lu(bt);
  if (!(std::abs(lu.determinant()) > 0.0)) throw NumericalError("Sigma-tilde is singular in the Phi step");
  const Matrix7 bt_inv = lu.inverse();
  const Eigen::Matrix<double, 7, 3> M = bt_inv.block<7, 3>(0, 3);

  // Z = [lagged cycles | eta-bar'] compressed to its R factor; the quadratic
  // form only depends on Z'Z.
  Eigen::MatrixXd Z(T, k + 7);
  for (int t = 0; t < T; ++t) {
    for (int l = 0; l < p; ++l) {
      if (t - l - 1 >= 0)
        Z.block<1, 3>(t, 3 * l) = eb.block<3, 1>(3, t - l - 1).transpose();
      else
        Z.block<1, 3>(t, 3 * l).setZero();
    }
    Z.block<1, 7>(t, k) = eb.col(t).transpose();
  }
  const int m = std::min(T, k + 7);
  const Eigen::HouseholderQR<Eigen::MatrixXd> zqr(Z);
  const Eigen::MatrixXd R =
      zqr.matrixQR().topRows(m).triangularView<Eigen::Upper>().toDenseMatrix();

  const int n = 9 * p;
  const Eigen::VectorXd v0 =
      phi_prior_variance(p, draw.kappa1, draw.kappa2, spec.prior.sigma_sq);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(7 * m + n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(7 * m + n);
  for (int s = 0; s < m; ++s) {
    const Eigen::Matrix<double, 7, 1> w = bt_inv * R.block(s, k, 1, 7).transpose();
    for (int r = 0; r < 7; ++r) {
      b(7 * s + r) = w(r);
      for (int i = 0; i < 3; ++i) A.block(7 * s + r, i * k, 1, k) = M(r, i) * R.block(s, 0, 1, k);
    }
  }
  for (int i = 0; i < n; ++i) A(7 * m + i, i) = 1.0 / std::sqrt(v0(i));

  const Eigen::HouseholderQR<Eigen::MatrixXd> aqr(A);
  const Eigen::MatrixXd Ra = aqr.matrixQR().topRows(n).triangularView<Eigen::Upper>().toDenseMatrix();
  if (!(Ra.diagonal().cwiseAbs().minCoeff() > 0.0))
    throw NumericalError("Phi posterior precision is not positive definite");
  const Eigen::VectorXd c = (aqr.householderQ().adjoint() * b).head(n);
  return {Ra.triangularView<Eigen::Upper>().solve(c), Ra};
}

std::vector<Matrix3> step_phi(const ParameterDraw& draw, const Eigen::VectorXd& y,
                              const ModelSpec& spec, Rng& rng) {
  const PhiConditional pc = phi_conditional(draw, y, spec);
  const int n = static_cast<int>(pc.mean.size());
  Eigen::VectorXd e(n);
  for (int i = 0; i < n; ++i) e(i) = standard_normal(rng);
  const Eigen::VectorXd draw_vec = pc.mean + pc.root.triangularView<Eigen::Upper>().solve(e);
  return phi_unvec(draw_vec, spec.p);
}

double kappa_shape(int p, int which) {
  const double shape = which == 1 ? 1.5 * p - 1.0 : 3.0 * p - 1.0;
  if (!(shape > 0)) throw ConfigError("inverse-gamma shape must be positive");
  return shape;
}

double truncated_inv_gamma_cdf(double x, double shape, double scale) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  return boost::math::gamma_q(shape, scale / x) / boost::math::gamma_q(shape, scale);
}

double truncated_inv_gamma_draw(double shape, double scale, Rng& rng) {
  if (!(scale > 0)) throw DegenerateScaleError("degenerate scale: inverse-gamma scale is zero");
  if (!(shape > 0)) throw ConfigError("inverse-gamma shape must be positive");
  // kappa = scale / X with X ~ Gamma(shape, 1) truncated to X > scale.
  const double tail = boost::math::gamma_q(shape, scale);
  const double u = uniform01(rng);
  if (tail > 1e-250) {
    const double X = boost::math::gamma_q_inv(shape, u * tail);
    if (X > scale) return scale / X;
  }
  // Far tail: exponential proposal from `scale` with the rate that makes the
  // acceptance ratio peak at the boundary.
  const double rate = shape > 1.0 ? std::max(1.0 - (shape - 1.0) / scale, 1e-3) : 1.0;
  for (;;) {
    const double X = scale + exponential(rng) / rate;
    const double log_acc =
        (shape - 1.0) * std::log(X / scale) - (1.0 - rate) * (X - scale);
    if (std::log(uniform01(rng)) <= log_acc) return scale / X;
  }
}

double step_kappa(const ParameterDraw& draw, int which, const ModelSpec& spec, Rng& rng) {
  if (which != 1 && which != 2) throw ConfigError("kappa index must be 1 or 2");
  const ShrinkageSums s = shrinkage_sums(draw.Phi, spec.prior.sigma_sq);
  const double scale = 0.5 * (which == 1 ? s.own : s.cross);
  return truncated_inv_gamma_draw(kappa_shape(spec.p, which), scale, rng);
}

// ---------------------------------------------------------------------------
// Prior and predictive draws

ParameterDraw initial_draw(const ModelSpec& spec) {
  ParameterDraw d;
  d.Phi.assign(spec.p, Matrix3::Zero());
  const Mask7 m = restriction_mask(spec.variant);
  d.B = spec.prior.b_mean;
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i)
      if (!m(i, j)) d.B(i, j) = 0.0;
  d.beta = m(6, 5) ? spec.prior.beta0 : 0.0;
  d.alpha = spec.prior.alpha0 > 0 ? spec.prior.alpha0 : std::sqrt(spec.prior.V_alpha);
  d.kappa1 = 0.5;
  d.kappa2 = 0.5;
  return d;
}

ParameterDraw draw_from_prior(const ModelSpec& spec, Rng& rng) {
  const PriorConfig& pr = spec.prior;
  ParameterDraw d;
  d.kappa1 = uniform01(rng);
  d.kappa2 = uniform01(rng);
  const Eigen::VectorXd v = phi_prior_variance(spec.p, d.kappa1, d.kappa2, pr.sigma_sq);
  Eigen::VectorXd phi(v.size());
  for (Eigen::Index i = 0; i < phi.size(); ++i) phi(i) = std::sqrt(v(i)) * standard_normal(rng);
  d.Phi = phi_unvec(phi, spec.p);

  const Mask7 m = restriction_mask(spec.variant);
  d.B.setZero();
  const double sb = std::sqrt(pr.V_b);
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i)
      if (m(i, j)) d.B(i, j) = pr.b_mean(i, j) + sb * standard_normal(rng);
  d.beta = m(6, 5) ? pr.beta0 + std::sqrt(pr.V_beta) * standard_normal(rng) : 0.0;
  d.alpha = positive_normal_draw(pr.alpha0, pr.V_alpha, rng);
  return d;
}

// Both simulators run the structural recursion forward instead of factoring
// the joint precision, which is badly conditioned when B is close to singular.
void draw_states_and_data(const ModelSpec& spec, ParameterDraw& draw, int T, Rng& rng,
                          Eigen::VectorXd& y) {
  const StructuralMatrices mats = assemble_structural(spec, draw);
  const int L = spec.lag_count();
  const Eigen::LLT<Eigen::Matrix4d> llt(spec.prior.V_tau00);
  if (llt.info() != Eigen::Success) throw ConfigError("V_tau00 is not positive definite");
  Eigen::Vector4d e0;
  for (int i = 0; i < 4; ++i) e0(i) = standard_normal(rng);
  const Eigen::Vector4d t0 = spec.prior.tau00_mean + llt.matrixL() * e0;

  draw.tau.resize(kTau0 + 3 * T);
  draw.tau.head<4>() = t0;
  y.resize(4 * T);
  std::vector<Vector7> eta(T);
  for (int t = 0; t < T; ++t) {
    Vector7 eps;
    for (int i = 0; i < 7; ++i) eps(i) = standard_normal(rng);
    Vector7 e = mats.B_tilde * eps;
    if (t < 2) e.noalias() += xi_block(t + 1) * t0;
    for (int i = 1; i <= L && t - i >= 0; ++i) e.noalias() += mats.A_tilde[i - 1] * eta[t - i];
    eta[t] = e;
    draw.tau.segment<3>(kTau0 + 3 * t) = e.head<3>();
    y.segment<4>(4 * t) << e(0) + e(3), e(1) + e(4), e(1) + e(2) + e(5), e(6);
  }
}

Eigen::VectorXd draw_data_given_states(const ModelSpec& spec, const ParameterDraw& draw, int T,
                                       Rng& rng) {
  if (draw.tau.size() != kTau0 + 3 * T) throw ConfigError("state path has the wrong length");
  const StructuralMatrices mats = assemble_structural(spec, draw);
  const int L = spec.lag_count();
  // Trend rows of A-tilde involve trends only, so given the whole trend path
  // the period-t trend innovation is known and the remaining four innovations
  // are Gaussian given it: mean S_ct S_tt^{-1} u_t, covariance the Schur
  // complement.
  const Matrix7& S = mats.Sigma_tilde;
  const Eigen::Matrix3d Stt = S.topLeftCorner<3, 3>();
  const Eigen::Matrix<double, 4, 3> Sct = S.bottomLeftCorner<4, 3>();
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(Stt);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericalError("trend block of Sigma-tilde is not positive definite");
  const Eigen::Matrix<double, 4, 3> G = ldlt.solve(Sct.transpose()).transpose();
  const Eigen::Matrix4d C = S.bottomRightCorner<4, 4>() - G * Sct.transpose();
  const Eigen::LLT<Eigen::Matrix4d> cl(0.5 * (C + C.transpose()));
  if (cl.info() != Eigen::Success) throw NumericalError("conditional innovation covariance is not positive definite");
  const Eigen::Matrix4d CL = cl.matrixL();

  const Eigen::Vector4d t0 = draw.tau.head<4>();
  std::vector<Vector7> eta(T);
  Eigen::VectorXd y(4 * T);
  for (int t = 0; t < T; ++t) {
    Vector7 pred = Vector7::Zero();
    if (t < 2) pred.noalias() += xi_block(t + 1) * t0;
    for (int i = 1; i <= L && t - i >= 0; ++i) pred.noalias() += mats.A_tilde[i - 1] * eta[t - i];
    const Eigen::Vector3d tau_t = draw.tau.segment<3>(kTau0 + 3 * t);
    const Eigen::Vector3d u_t = tau_t - pred.head<3>();
    Eigen::Vector4d z;
    for (int i = 0; i < 4; ++i) z(i) = standard_normal(rng);
    const Eigen::Vector4d u_c = G * u_t + CL * z;
    Vector7 e;
    e << tau_t, pred.tail<4>() + u_c;
    eta[t] = e;
    y.segment<4>(4 * t) << e(0) + e(3), e(1) + e(4), e(1) + e(2) + e(5), e(6);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Sampler

namespace {

AdaptiveRwm make_impact_kernel(const ModelSpec& spec, double target) {
  const int d = restriction_mask(spec.variant).topLeftCorner<6, 6>().count();
  return AdaptiveRwm(Eigen::VectorXd::Constant(d, 0.1 * std::sqrt(spec.prior.V_b)), target);
}

}  // namespace

GibbsSampler::GibbsSampler(ModelSpec spec, SamplerConfig config)
    : spec_(std::move(spec)),
      config_(config),
      kernel_(make_impact_kernel(spec_, config.mh_target_accept)) {
  spec_.validate();
  config_.validate();
}

void GibbsSampler::sweep(ParameterDraw& draw, const Eigen::VectorXd& y, Rng& rng, bool adapt) {
  draw.tau = step_states(draw, y, spec_, rng);

  const ImpactUpdate iu = step_impact(draw, y, spec_, kernel_, rng, adapt, config_.mh_steps);
  draw.B = iu.B;
  draw.beta = iu.beta;
  draw.alpha = iu.alpha;

  draw.Phi = step_phi(draw, y, spec_, rng);
  for (int attempt = 0;; ++attempt) {
    try {
      draw.kappa1 = step_kappa(draw, 1, spec_, rng);
      draw.kappa2 = step_kappa(draw, 2, spec_, rng);
      break;
    } catch (const DegenerateScaleError&) {
      if (attempt >= 10) throw;
      draw.Phi = step_phi(draw, y, spec_, rng);
    }
  }
}

PosteriorChain run_chain(const ModelSpec& spec, const Dataset& data, const SamplerConfig& config) {
  data.validate();
  return run_chain(spec, data.stacked(), data.T(), config);
}

PosteriorChain run_chain(const ModelSpec& spec, const Eigen::VectorXd& y, int T,
                         const SamplerConfig& config) {
  if (y.size() != 4 * T) throw ConfigError("data length does not match T");
  GibbsSampler sampler(spec, config);
  Rng rng(config.seed, static_cast<std::uint64_t>(config.chain_index));

  PosteriorChain chain;
  chain.spec = spec;
  chain.config = config;
  chain.T = T;
  chain.draws.reserve(config.n_keep);
  chain.spectral_radius.reserve(config.n_keep);

  ParameterDraw draw = initial_draw(spec);
  const int adapt_end = config.adaptation_end();
  const long total = static_cast<long>(config.n_burn) + static_cast<long>(config.n_keep) * config.thin;
  std::int64_t kept_props = 0, kept_acc = 0;
  for (long it = 0; it < total; ++it) {
    const bool adapt = it < adapt_end;
    const std::int64_t props0 = sampler.impact_kernel().proposals();
    const std::int64_t acc0 = sampler.impact_kernel().accepted();
    try {
      sampler.sweep(draw, y, rng, adapt);
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "iteration " << it << ": " << e.what();
      throw NumericalError(os.str());
    }
    if (it >= config.n_burn) {
      kept_props += sampler.impact_kernel().proposals() - props0;
      kept_acc += sampler.impact_kernel().accepted() - acc0;
      if ((it - config.n_burn + 1) % config.thin == 0) {
        chain.draws.push_back(draw);
        chain.spectral_radius.push_back(cycle_spectral_radius(draw.Phi));
      }
    }
  }
  chain.accept_rate_B = kept_props > 0 ? static_cast<double>(kept_acc) / kept_props : 0.0;
  chain.impact_singular_rejections = sampler.impact_kernel().rejected_infinite();
  return chain;
}

// ---------------------------------------------------------------------------
// Data-dependent prior pieces

double ar_residual_variance(const Eigen::VectorXd& series, int p) {
  const int n = static_cast<int>(series.size());
  if (p < 1) throw ConfigError("AR order must be >= 1");
  if (n <= 2 * p + 1)
    throw ConfigError("series of length " + std::to_string(n) + " is too short for AR(" +
                      std::to_string(p) + ")");
  const int rows = n - p, k = p + 1;
  Eigen::MatrixXd X(rows, k);
  Eigen::VectorXd Y(rows);
  for (int t = p; t < n; ++t) {
    X(t - p, 0) = 1.0;
    for (int l = 1; l <= p; ++l) X(t - p, l) = series(t - l);
    Y(t - p) = series(t);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) throw NumericalError("AR regressor matrix is rank deficient");
  const Eigen::VectorXd coef = qr.solve(Y);
  const Eigen::VectorXd resid = Y - X * coef;
  return resid.squaredNorm() / static_cast<double>(rows - k);
}

Eigen::Vector3d fit_ar_residual_variances(const Dataset& data, int p) {
  return {ar_residual_variance(data.g, p), ar_residual_variance(data.pi, p),
          ar_residual_variance(data.r, p)};
}

PriorConfig data_prior(const Dataset& data, int p, PriorConfig base) {
  data.validate();
  base.tau00_mean = Eigen::Vector4d(data.g(0), data.g(0), data.pi(0), data.r(0));
  const double mbar = data.m.mean();
  const double sd_m = data.T() > 1 ? std::sqrt((data.m.array() - mbar).square().sum() / (data.T() - 1))
                                   : 0.0;
  base.beta0 = 0.5 * sd_m;
  base.sigma_sq = fit_ar_residual_variances(data, p);
  return base;
}

}  // namespace smuciv
