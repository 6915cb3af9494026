#include "doctest.h"

#include <cmath>

#include "smuciv/errors.hpp"
#include "smuciv/gaussian_system.hpp"
#include "smuciv/local_level.hpp"
#include "smuciv/marglik.hpp"
#include "smuciv/oracle.hpp"
#include "test_support.hpp"

using namespace smuciv;
using smuciv::testing::random_instance;

namespace {

double log_integral(const std::function<double(double)>& log_f, double shift) {
  return shift + std::log(oracle::quadrature_1d([&](double k) { return std::exp(log_f(k) - shift); }, 0.0, 1.0));
}

oracle::LocalLevelParams to_oracle(const LocalLevelModel& m) {
  return {m.a0, m.P0, m.mu0, m.V_mu, m.sigma_u2, m.sigma_e2};
}

}  // namespace

TEST_CASE("marginal prior of Phi agrees with quadrature over kappa") {
  Rng rng(51, 0);
  for (int p = 1; p <= 4; ++p) {
    ModelSpec spec;
    spec.p = p;
    spec.prior.sigma_sq = Eigen::Vector3d(0.8, 1.7, 0.4);
    std::vector<Matrix3> Phi;
    for (int l = 0; l < p; ++l) Phi.push_back(Matrix3(testing::random_matrix(3, 3, 0.3 / (l + 1), rng)));
    // p(Phi | kappa) factors into a kappa1 part and a kappa2 part.
    const double f0 = log_conditional_prior_phi(Phi, 0.5, 0.5, spec);
    const double l1 = log_integral([&](double k) { return log_conditional_prior_phi(Phi, k, 0.5, spec); }, f0);
    const double l2 = log_integral([&](double k) { return log_conditional_prior_phi(Phi, 0.5, k, spec); }, f0);
    CAPTURE(p);
    CHECK(std::abs(log_marginal_prior_phi(Phi, spec) - (l1 + l2 - f0)) < 1e-8);
  }
}

TEST_CASE("conditional prior of Phi is the product of normals") {
  Rng rng(52, 0);
  ModelSpec spec;
  spec.p = 2;
  spec.prior.sigma_sq = Eigen::Vector3d(1.2, 0.3, 2.5);
  const std::vector<Matrix3> Phi = {Matrix3(testing::random_matrix(3, 3, 0.3, rng)),
                                    Matrix3(testing::random_matrix(3, 3, 0.2, rng))};
  const Eigen::VectorXd v = phi_prior_variance(2, 0.3, 0.6, spec.prior.sigma_sq);
  const Eigen::VectorXd x = phi_vec(Phi);
  const double ref = oracle::gaussian_log_density(x, Eigen::VectorXd::Zero(18), v.asDiagonal().toDenseMatrix());
  CHECK(log_conditional_prior_phi(Phi, 0.3, 0.6, spec) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("marginal prior of Phi at zero is degenerate") {
  ModelSpec spec;
  spec.p = 1;
  CHECK_THROWS_AS(log_marginal_prior_phi({Matrix3::Zero()}, spec), DegenerateScaleError);
}

TEST_CASE("alpha tuning upper bound") {
  // Far from zero: one-sided normal quantile.
  const double w = solve_alpha_upper(10.0, 1.0);
  CHECK(std::abs(w - (10.0 + 1.6448536269514722)) < 1e-3);
  // Positive mass below the level: no finite bound.
  CHECK(std::isinf(solve_alpha_upper(-1.0, 1.0)));
  // Mass of (0, w) is the level.
  const double m = 1.5, s = 0.5;
  const double w2 = solve_alpha_upper(m, s);
  const double mass = 0.5 * (std::erfc(-(w2 - m) / (s * std::sqrt(2.0))) - std::erfc(m / (s * std::sqrt(2.0))));
  CHECK(mass == doctest::Approx(0.95).epsilon(1e-10));
}

TEST_CASE("positive truncated normal integrates to one") {
  for (auto [m, s] : {std::pair{0.4, 0.5}, std::pair{-1.0, 1.0}, std::pair{3.0, 0.2}}) {
    const PositiveTruncatedNormal q(m, s);
    const double hi = std::isinf(q.upper()) ? m + 40 * s : q.upper();
    const double total = oracle::quadrature_1d([&](double x) { return std::exp(q.log_density(x)); }, 0.0, hi);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(q.log_density(-0.1) == -HUGE_VAL);
  }
}

TEST_CASE("truncated Gaussian: mass and normalization") {
  Rng rng(53, 0);
  const Eigen::MatrixXd a = testing::random_matrix(5, 5, 1.0, rng);
  const Eigen::MatrixXd cov = a * a.transpose() + Eigen::MatrixXd::Identity(5, 5);
  const Eigen::VectorXd mean = testing::random_matrix(5, 1, 1.0, rng);
  const TruncatedGaussian q(mean, cov);
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const int n = 200000;
  // E_N[q / phi] over the untruncated normal is the integral of q.
  double s1 = 0, s2 = 0;
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e(5);
    for (int k = 0; k < 5; ++k) e(k) = standard_normal(rng);
    const Eigen::VectorXd x = mean + llt.matrixL() * e;
    const double lq = q.log_density(x);
    const double r = std::isinf(lq) ? 0.0 : std::exp(lq - oracle::gaussian_log_density(x, mean, cov));
    s1 += r;
    s2 += r * r;
    inside += q.contains(x);
  }
  const double m = s1 / n, se = std::sqrt((s2 / n - m * m) / n);
  CHECK(std::abs(m - 1.0) < 3.0 * se);
  const double rate = static_cast<double>(inside) / n;
  CHECK(std::abs(rate - 0.95) < 3.0 * std::sqrt(0.95 * 0.05 / n));
  for (int i = 0; i < 100; ++i) CHECK(q.contains(q.sample(rng)));
}

TEST_CASE("harmonic-mean combiner") {
  const std::vector<double> c(200, -3.0);
  const MarglikResult r = harmonic_mean_estimate(c);
  CHECK(r.log_ml == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(r.mc_se == doctest::Approx(0.0));
  std::vector<double> t = {std::log(1.0), std::log(3.0), -HUGE_VAL, std::log(4.0)};
  const MarglikResult r2 = harmonic_mean_estimate(t, 2);
  CHECK(r2.log_ml == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  CHECK(r2.n_zero_weight == 1);
  CHECK_THROWS_AS(harmonic_mean_estimate({-HUGE_VAL, -HUGE_VAL}), NumericalError);
  CHECK_THROWS_AS(harmonic_mean_estimate({}), ConfigError);
}

TEST_CASE("integrated likelihood: Monte Carlo over prior states") {
  // p(y) = E_tau[p(y | tau)] with tau from its prior, on a short panel.
  Rng rng(54, 0);
  const int T = 2;
  auto in = random_instance(1, T, rng);
  in.spec.prior.V_tau00 = Eigen::Matrix4d::Identity();
  in.mats = assemble_structural(in.spec, in.draw);
  Eigen::VectorXd y;
  ParameterDraw d = in.draw;
  draw_states_and_data(in.spec, d, T, rng, y);
  const GaussianSystem gs = build_joint(in.spec, in.mats, in.spec.prior, T);
  const int n = 400000;
  std::vector<double> lw(n);
  for (int i = 0; i < n; ++i) {
    ParameterDraw e = in.draw;
    Eigen::VectorXd unused;
    draw_states_and_data(in.spec, e, T, rng, unused);
    const ConditionalGaussian c = condition_on_latent(gs.joint, e.tau);
    const Eigen::MatrixXd K = c.precision().to_dense();
    const Eigen::VectorXd r = y - c.mean();
    lw[i] = -0.5 * (4 * T * std::log(2.0 * M_PI) - c.factor().log_det() + r.dot(K * r));
  }
  double M = -HUGE_VAL;
  for (double v : lw) M = std::max(M, v);
  double s1 = 0, s2 = 0;
  for (double v : lw) {
    const double w = std::exp(v - M);
    s1 += w;
    s2 += w * w;
  }
  const double mean = s1 / n, se = std::sqrt((s2 / n - mean * mean) / n);
  const double exact = log_integrated_likelihood(in.draw, in.spec, y);
  CHECK(std::abs(std::exp(exact - M) - mean) < 3.0 * se);

  // A generic shift of the data moves the density.
  Eigen::VectorXd shifted = y;
  shifted(5) += 1.0;
  CHECK(std::abs(log_integrated_likelihood(in.draw, in.spec, shifted) - exact) > 1e-3);
}

TEST_CASE("integrated likelihood: scaling Sigma-tilde and V_tau00 together") {
  // With a zero initial mean, Omega -> c Omega scales y by sqrt(c).
  Rng rng(55, 0);
  auto in = random_instance(2, 6, rng);
  in.spec.prior.tau00_mean.setZero();
  const double c = 2.7, rc = std::sqrt(c);
  ParameterDraw s = in.draw;
  s.B *= rc;
  s.beta *= rc;
  s.alpha *= rc;
  ModelSpec scaled = in.spec;
  scaled.prior.V_tau00 *= c;
  const double lhs = log_integrated_likelihood(s, scaled, in.y);
  const double rhs = log_integrated_likelihood(in.draw, in.spec, in.y / rc) - 0.5 * in.y.size() * std::log(c);
  CHECK(std::abs(lhs - rhs) < 1e-8);
  const auto mats = assemble_structural(scaled, s);
  const oracle::DenseGaussian dense = oracle::dense_joint(scaled, mats, scaled.prior, 6);
  CHECK(std::abs(lhs - oracle::dense_log_density_tail(dense, in.y)) < 1e-8);
}

TEST_CASE("local level: analytic, Kalman and banded evidence agree") {
  Rng rng(56, 0);
  LocalLevelModel m;
  const auto sample = simulate_local_level(m, 20, rng);
  const double a = oracle::analytic_local_level_ml(sample.y, to_oracle(m));
  CHECK(std::abs(a - oracle::kalman_local_level_ml(sample.y, to_oracle(m))) < 1e-10);

  // T = 1: y ~ N(a0 + mu0, P0 + V_mu + sigma_u2 + sigma_e2).
  Eigen::VectorXd y1(1);
  y1 << 1.3;
  const double v = m.P0 + m.V_mu + m.sigma_u2 + m.sigma_e2;
  const double ref = -0.5 * (std::log(2 * M_PI * v) + (1.3 - m.a0 - m.mu0) * (1.3 - m.a0 - m.mu0) / v);
  CHECK(oracle::analytic_local_level_ml(y1, to_oracle(m)) == doctest::Approx(ref).epsilon(1e-14));

  // Known drift: the banded marginal of y is the analytic evidence with V_mu = 0.
  auto known = to_oracle(m);
  known.mu0 = 0.3;
  known.V_mu = 0.0;
  CHECK(std::abs(local_level_log_likelihood(m, sample.y, 0.3) - oracle::analytic_local_level_ml(sample.y, known)) < 1e-10);
}

TEST_CASE("local level: CMGD and GD recover the analytic evidence") {
  Rng rng(57, 0);
  LocalLevelModel m;
  const auto sample = simulate_local_level(m, 20, rng);
  const double exact = oracle::analytic_local_level_ml(sample.y, to_oracle(m));
  const LocalLevelChain chain = local_level_gibbs(m, sample.y, 1000, 20000, rng);
  const MarglikResult cm = local_level_ml(m, sample.y, chain, Estimator::CMGD);
  const MarglikResult gd = local_level_ml(m, sample.y, chain, Estimator::GD);
  CHECK(std::abs(cm.log_ml - exact) < 0.05);
  CHECK(cm.mc_se < 0.02);
  CHECK(std::abs(gd.log_ml - cm.log_ml) < 2.0 * std::sqrt(gd.mc_se * gd.mc_se + cm.mc_se * cm.mc_se));
}

TEST_CASE("tuning density from a chain") {
  Rng rng(58, 0);
  auto in = random_instance(1, 30, rng, Variant::R3);
  Eigen::VectorXd y;
  draw_states_and_data(in.spec, in.draw, 30, rng, y);
  SamplerConfig cfg;
  cfg.n_burn = 300;
  cfg.n_keep = 1200;
  const PosteriorChain chain = run_chain(in.spec, y, 30, cfg);
  const TuningDensity q = build_tuning(chain);
  CHECK(q.q_phi.dim() == 9);
  CHECK(q.q_b.dim() == free_count(Variant::R3) - 1);
  CHECK_FALSE(q.has_beta);
  int inside = 0;
  for (const auto& d : chain.draws) inside += q.violated_region(d).empty();
  CHECK(inside > 0);
  CHECK_THROWS_AS(build_tuning(chain, 5000), ConfigError);
  PosteriorChain shorter = chain;
  shorter.draws.resize(kMinTuningDraws - 1);
  CHECK_THROWS_AS(estimate_ml(shorter, y, Estimator::CMGD), ConfigError);
}

TEST_CASE("compare table ranks by log-ML") {
  std::vector<CompareRow> rows(3);
  rows[0].variant = "Baseline";
  rows[0].result.log_ml = -210.5;
  rows[1].variant = "R1";
  rows[1].result.log_ml = -207.25;
  rows[2].variant = "R2";
  rows[2].result.log_ml = -231;
  const std::string csv = compare_csv(rows);
  CHECK(csv.rfind("variant,log_ml,mc_se,rank\n", 0) == 0);
  CHECK(csv.find("R1,-207.25,0,1\n") != std::string::npos);
  CHECK(csv.find("Baseline,-210.5,0,2\n") != std::string::npos);
  CHECK(csv.find("R2,-231,0,3\n") != std::string::npos);
}
