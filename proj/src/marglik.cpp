#include "smuciv/marglik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Eigenvalues>

#include "smuciv/csv.hpp"
#include "smuciv/errors.hpp"
#include "smuciv/gaussian_system.hpp"

namespace smuciv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void moments(const std::vector<Eigen::VectorXd>& xs, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  const int d = static_cast<int>(xs.front().size());
  const double n = static_cast<double>(xs.size());
  mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : xs) mean += x;
  mean /= n;
  cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : xs) {
    const Eigen::VectorXd c = x - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= (n - 1.0);
  if (!mean.allFinite() || !cov.allFinite()) throw NumericalError("posterior moments are not finite");
}

TruncatedGaussian fit_block(const std::vector<Eigen::VectorXd>& xs) {
  Eigen::VectorXd m;
  Eigen::MatrixXd c;
  moments(xs, m, c);
  return TruncatedGaussian(m, regularize_covariance(c));
}

double logit(double x) { return std::log(x / (1.0 - x)); }

}  // namespace

// ---------------------------------------------------------------------------

TruncatedGaussian::TruncatedGaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov, double level)
    : mean_(std::move(mean)), cov_(std::move(cov)), level_(level) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size())
    throw ConfigError("tuning covariance does not match its mean");
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) throw NumericalError("tuning covariance is not positive definite");
  chol_ = llt.matrixL();
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
  const boost::math::chi_squared_distribution<double> chi2(static_cast<double>(mean_.size()));
  threshold_ = boost::math::quantile(chi2, level_);
}

double TruncatedGaussian::mahalanobis(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  return z.squaredNorm();
}

double TruncatedGaussian::log_density(const Eigen::VectorXd& x) const {
  const double q = mahalanobis(x);
  if (!(q < threshold_)) return kNegInf;
  return -0.5 * (dim() * kLog2Pi + log_det_ + q) - std::log(level_);
}

Eigen::VectorXd TruncatedGaussian::sample(Rng& rng) const {
  Eigen::VectorXd e(dim());
  for (;;) {
    for (int i = 0; i < dim(); ++i) e(i) = standard_normal(rng);
    if (e.squaredNorm() < threshold_) return mean_ + chol_ * e;
  }
}

double solve_alpha_upper(double mean, double sd, double level) {
  if (!(sd > 0)) throw ConfigError("alpha tuning scale must be positive");
  const boost::math::normal_distribution<double> nd;
  const double lo_mass = boost::math::cdf(nd, -mean / sd);
  if (lo_mass + level >= 1.0) return std::numeric_limits<double>::infinity();
  auto f = [&](double w) { return boost::math::cdf(nd, (w - mean) / sd) - lo_mass - level; };
  double a = 0.0, b = std::max(mean, 0.0) + sd;
  while (f(b) < 0) b = 2.0 * b + sd;
  while (b - a > 1e-12 * std::max(1.0, b)) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    (f(mid) < 0 ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

PositiveTruncatedNormal::PositiveTruncatedNormal(double mean, double sd, double level)
    : mean_(mean), sd_(sd) {
  w_ = solve_alpha_upper(mean, sd, level);
  const boost::math::normal_distribution<double> nd;
  if (std::isinf(w_))
    log_mass_ = std::log(boost::math::cdf(boost::math::complement(nd, -mean / sd)));
  else
    log_mass_ = std::log(level);
}

double PositiveTruncatedNormal::log_density(double x) const {
  if (!contains(x)) return kNegInf;
  const double z = (x - mean_) / sd_;
  return -0.5 * (kLog2Pi + z * z) - std::log(sd_) - log_mass_;
}

Eigen::MatrixXd regularize_covariance(const Eigen::MatrixXd& cov) {
  const int d = static_cast<int>(cov.rows());
  Eigen::MatrixXd c = 0.5 * (cov + cov.transpose());
  const double avg = c.trace() / d;
  if (!(avg > 0)) throw NumericalError("posterior covariance has non-positive trace");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < 1e-10 * avg) c.diagonal().array() += 1e-8 * avg;
  return c;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd free_b_vector(Variant v, const Matrix6& B) {
  const Mask7 m = restriction_mask(v);
  Eigen::VectorXd x(m.topLeftCorner<6, 6>().count());
  int k = 0;
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i)
      if (m(i, j)) x(k++) = B(i, j);
  return x;
}

double TuningDensity::log_density(const ParameterDraw& d) const {
  double lq = q_alpha.log_density(d.alpha);
  if (!std::isfinite(lq)) return kNegInf;
  lq += q_phi.log_density(phi_vec(d.Phi));
  if (!std::isfinite(lq)) return kNegInf;
  lq += q_b.log_density(free_b_vector(variant, d.B));
  if (!std::isfinite(lq)) return kNegInf;
  if (has_beta) lq += q_beta.log_density(Eigen::VectorXd::Constant(1, d.beta));
  return lq;
}

std::string TuningDensity::violated_region(const ParameterDraw& d) const {
  if (!q_phi.contains(phi_vec(d.Phi))) return "R_Phi";
  if (!q_b.contains(free_b_vector(variant, d.B))) return "R_B";
  if (has_beta && !q_beta.contains(Eigen::VectorXd::Constant(1, d.beta))) return "R_beta";
  if (!q_alpha.contains(d.alpha)) return "R_alpha";
  return {};
}

static TuningDensity fit_tuning(const std::vector<ParameterDraw>& draws, std::size_t lo, std::size_t hi,
                                const ModelSpec& spec) {
  if (hi - lo < 2) throw ConfigError("tuning density needs at least 2 draws");
  TuningDensity td;
  td.variant = spec.variant;
  td.p = spec.p;
  td.has_beta = beta_free(td.variant);

  std::vector<Eigen::VectorXd> phi, b, beta;
  double sa = 0.0, saa = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const ParameterDraw& d = draws[i];
    phi.push_back(phi_vec(d.Phi));
    b.push_back(free_b_vector(td.variant, d.B));
    if (td.has_beta) beta.push_back(Eigen::VectorXd::Constant(1, d.beta));
    sa += d.alpha;
  }
  const double n = static_cast<double>(hi - lo);
  const double alpha_mean = sa / n;
  for (std::size_t i = lo; i < hi; ++i)
    saa += (draws[i].alpha - alpha_mean) * (draws[i].alpha - alpha_mean);
  const double alpha_var = saa / (n - 1.0);
  if (!(alpha_var > 0) || !std::isfinite(alpha_var))
    throw NumericalError("posterior variance of alpha is not positive");

  td.q_phi = fit_block(phi);
  td.q_b = fit_block(b);
  if (td.has_beta) td.q_beta = fit_block(beta);
  td.q_alpha = PositiveTruncatedNormal(alpha_mean, std::sqrt(alpha_var));
  return td;
}

TuningDensity build_tuning(const PosteriorChain& chain, std::size_t min_draws) {
  if (chain.draws.size() < min_draws)
    throw ConfigError("tuning density needs at least " + std::to_string(min_draws) +
                      " draws, chain has " + std::to_string(chain.draws.size()));
  return fit_tuning(chain.draws, 0, chain.draws.size(), chain.spec);
}

// ---------------------------------------------------------------------------

double log_integrated_likelihood(const ParameterDraw& d, const ModelSpec& spec,
                                 const Eigen::VectorXd& y) {
  const int T = static_cast<int>(y.size() / 4);
  const StructuralMatrices mats = assemble_structural(spec, d);
  const GaussianSystem sys = build_joint(spec, mats, spec.prior, T);
  return marginal_of_y(sys.joint).log_density(y);
}

double log_marginal_prior_phi(const std::vector<Matrix3>& Phi, const ModelSpec& spec) {
  const int p = static_cast<int>(Phi.size());
  const Eigen::Vector3d& s2 = spec.prior.sigma_sq;
  const ShrinkageSums s = shrinkage_sums(Phi, s2);
  const double S1 = 0.5 * s.own, S2 = 0.5 * s.cross;
  if (!(S1 > 0) || !(S2 > 0))
    throw DegenerateScaleError("degenerate scale: marginal prior of Phi diverges at the prior mean");

  // log c_kappa: own-lag factor l, cross-lag factor sigma_j l / sigma_i.
  double log_c = -4.5 * p * kLog2Pi;
  for (int l = 1; l <= p; ++l)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        log_c += std::log(static_cast<double>(l));
        if (i != j) log_c += 0.5 * (std::log(s2(j)) - std::log(s2(i)));
      }

  auto block = [](double nu, double S) {
    return std::lgamma(nu) - nu * std::log(S) + std::log(boost::math::gamma_q(nu, S));
  };
  return log_c + block(kappa_shape(p, 1), S1) + block(kappa_shape(p, 2), S2);
}

double log_conditional_prior_phi(const std::vector<Matrix3>& Phi, double kappa1, double kappa2,
                                 const ModelSpec& spec) {
  const int p = static_cast<int>(Phi.size());
  const Eigen::VectorXd v = phi_prior_variance(p, kappa1, kappa2, spec.prior.sigma_sq);
  const Eigen::VectorXd phi = phi_vec(Phi);
  return -0.5 * (v.size() * kLog2Pi + v.array().log().sum() + (phi.array().square() / v.array()).sum());
}

std::string to_string(Estimator e) { return e == Estimator::GD ? "GD" : "CMGD"; }

MarglikResult harmonic_mean_estimate(const std::vector<double>& log_terms, int batches) {
  MarglikResult r;
  r.n_draws = log_terms.size();
  if (log_terms.empty()) throw ConfigError("no draws for the marginal likelihood");
  double M = kNegInf;
  for (double v : log_terms) {
    if (std::isnan(v) || v == HUGE_VAL) throw NumericalError("non-finite harmonic-mean term");
    if (v == kNegInf) ++r.n_zero_weight;
    M = std::max(M, v);
  }
  if (M == kNegInf) throw NumericalError("every draw has zero tuning weight");

  // Ordered summation for reproducibility.
  const std::size_t n = log_terms.size();
  double total = 0.0;
  for (double v : log_terms) total += std::exp(v - M);
  const double mean = total / static_cast<double>(n);
  r.log_ml = -(M + std::log(mean));

  const std::size_t nb = std::min<std::size_t>(batches, n);
  if (nb >= 2) {
    const std::size_t size = n / nb;
    std::vector<double> bm(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t lo = b * size, hi = b + 1 == nb ? n : lo + size;
      for (std::size_t i = lo; i < hi; ++i) bm[b] += std::exp(log_terms[i] - M);
      bm[b] /= static_cast<double>(hi - lo);
    }
    double bmean = 0.0;
    for (double v : bm) bmean += v;
    bmean /= static_cast<double>(nb);
    double var = 0.0;
    for (double v : bm) var += (v - bmean) * (v - bmean);
    var /= static_cast<double>(nb - 1);
    r.mc_se = std::sqrt(var / static_cast<double>(nb)) / mean;
  }
  return r;
}

namespace {

// Joint log-density of (tau, y) given the parameters, evaluated in z-order.
double log_joint_tau_y(const ParameterDraw& d, const ModelSpec& spec, const Eigen::VectorXd& y) {
  const int T = static_cast<int>(y.size() / 4);
  const StructuralMatrices mats = assemble_structural(spec, d);
  const GaussianSystem sys = build_joint(spec, mats, spec.prior, T);
  const JointGaussian& jg = sys.joint;
  Eigen::VectorXd z(jg.mean.size());
  for (std::size_t i = 0; i < jg.latent_index.size(); ++i) z(jg.latent_index[i]) = d.tau(i);
  for (std::size_t i = 0; i < jg.observed_index.size(); ++i) z(jg.observed_index[i]) = y(i);
  const Eigen::VectorXd dz = z - jg.mean;
  const double quad = dz.dot(jg.precision.multiply(dz));
  return -0.5 * z.size() * kLog2Pi + 0.5 * *jg.log_det_precision - 0.5 * quad;
}

}  // namespace

MarglikResult estimate_ml(const PosteriorChain& chain, const Eigen::VectorXd& y, Estimator estimator) {
  const ModelSpec& spec = chain.spec;
  if (y.size() != 4 * chain.T) throw ConfigError("data length does not match the chain");
  if (estimator == Estimator::GD && chain.T > kGdMaxT)
    throw ConfigError("the GD estimator is limited to T <= " + std::to_string(kGdMaxT));

  const std::size_t n = chain.draws.size();
  if (n < kMinTuningDraws)
    throw ConfigError("the estimator needs at least " + std::to_string(kMinTuningDraws) +
                      " draws, chain has " + std::to_string(n));

  // Two-fold cross-fitting: each half is weighted with q fitted on the other.
  struct Fitted {
    TuningDensity td;
    TruncatedGaussian q_tau, q_kappa;  // GD only
  };
  const std::size_t mid = n / 2;
  auto fit = [&](std::size_t lo, std::size_t hi) {
    Fitted f{fit_tuning(chain.draws, lo, hi, spec), {}, {}};
    if (estimator == Estimator::GD) {
      std::vector<Eigen::VectorXd> tau, kap;
      for (std::size_t i = lo; i < hi; ++i) {
        const ParameterDraw& d = chain.draws[i];
        tau.push_back(d.tau);
        kap.push_back(Eigen::Vector2d(logit(d.kappa1), logit(d.kappa2)));
      }
      f.q_tau = fit_block(tau);
      f.q_kappa = fit_block(kap);
    }
    return f;
  };
  const Fitted fits[2] = {fit(mid, n), fit(0, mid)};

  std::vector<double> terms;
  terms.reserve(chain.draws.size());
  std::map<std::string, std::size_t> misses;
  for (std::size_t i = 0; i < n; ++i) {
    const ParameterDraw& d = chain.draws[i];
    const Fitted& f = fits[i < mid ? 0 : 1];
    const TuningDensity& td = f.td;
    double lq = td.log_density(d);
    if (!std::isfinite(lq)) {
      ++misses[td.violated_region(d)];
      terms.push_back(kNegInf);
      continue;
    }
    const double lp_impact = log_prior_impact(spec, d.B, d.beta, d.alpha);
    if (estimator == Estimator::CMGD) {
      const double ll = log_integrated_likelihood(d, spec, y);
      const double lp_phi = log_marginal_prior_phi(d.Phi, spec);
      terms.push_back(lq - ll - lp_impact - lp_phi);
    } else {
      const Eigen::Vector2d kz(logit(d.kappa1), logit(d.kappa2));
      const double lqk = f.q_kappa.log_density(kz);
      const double lqt = f.q_tau.log_density(d.tau);
      if (!std::isfinite(lqk) || !std::isfinite(lqt)) {
        ++misses[std::isfinite(lqk) ? "R_tau" : "R_kappa"];
        terms.push_back(kNegInf);
        continue;
      }
      // Density of kappa from the logit-scale Gaussian.
      lq += lqt + lqk - std::log(d.kappa1 * (1 - d.kappa1)) - std::log(d.kappa2 * (1 - d.kappa2));
      const double lj = log_joint_tau_y(d, spec, y);
      const double lp_phi = log_conditional_prior_phi(d.Phi, d.kappa1, d.kappa2, spec);
      terms.push_back(lq - lj - lp_impact - lp_phi);
    }
  }
  MarglikResult r;
  try {
    r = harmonic_mean_estimate(terms);
  } catch (const NumericalError&) {
    std::ostringstream os;
    os << "every posterior draw falls outside the tuning support:";
    for (const auto& [region, count] : misses) os << " " << region << " (" << count << ")";
    throw NumericalError(os.str());
  }
  r.estimator = estimator;
  return r;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].result.log_ml > rows[b].result.log_ml;
  });
  std::vector<int> rank(rows.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = static_cast<int>(k) + 1;
  std::string out = "variant,log_ml,mc_se,rank\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    out += rows[i].variant + "," + format_double(rows[i].result.log_ml) + "," +
           format_double(rows[i].result.mc_se) + "," + std::to_string(rank[i]) + "\n";
  return out;
}

}  // namespace smuciv
