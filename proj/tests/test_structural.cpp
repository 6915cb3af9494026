#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "smuciv/data_io.hpp"
#include "smuciv/errors.hpp"
#include "smuciv/structural.hpp"
#include "test_support.hpp"

using namespace smuciv;

namespace {

ParameterDraw prior_mean_draw(int p, double phi_diag) {
  ModelSpec spec;
  spec.p = p;
  ParameterDraw d = initial_draw(spec);
  d.Phi.assign(p, Matrix3::Zero());
  d.Phi[0] = phi_diag * Matrix3::Identity();
  d.B = PriorConfig::default_b_mean();
  d.beta = 0.5;
  d.alpha = 0.8;
  return d;
}

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean(), y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

PosteriorChain fake_chain(const testing::Instance& in, int n, Rng& rng) {
  PosteriorChain c;
  c.spec = in.spec;
  c.T = in.T;
  for (int k = 0; k < n; ++k) {
    ParameterDraw d = in.draw;
    d.tau = testing::random_matrix(4 + 3 * in.T, 1, 1.0, rng);
    for (auto& m : d.Phi) m += Matrix3(testing::random_matrix(3, 3, 0.02, rng));
    d.B(5, 5) += 0.05 * standard_normal(rng);
    c.draws.push_back(d);
    c.spectral_radius.push_back(cycle_spectral_radius(d.Phi));
  }
  return c;
}

}  // namespace

TEST_CASE("recovered shocks reproduce the simulated ones") {
  for (int p = 1; p <= 3; ++p) {
    ModelSpec spec;
    spec.p = p;
    Rng rng(31, p);
    ParameterDraw truth = prior_mean_draw(p, 0.5);
    truth.B(3, 4) = 0.2;
    truth.B(5, 3) = -0.3;
    const SimulationResult sim = simulate_dgp(spec, truth, 80, rng);
    truth.tau = sim.tau;
    const Eigen::MatrixXd eps = recover_shocks(truth, sim.data.stacked(), spec);
    CAPTURE(p);
    CHECK((eps - sim.shocks).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("shock covariance and exogeneity of the instrument") {
  ModelSpec spec;
  spec.p = 1;
  Rng rng(32, 0);
  ParameterDraw truth = prior_mean_draw(1, 0.3);
  truth.beta = 0.0;
  const int T = 10000;
  const SimulationResult sim = simulate_dgp(spec, truth, T, rng);
  truth.tau = sim.tau;
  const Eigen::MatrixXd eps = recover_shocks(truth, sim.data.stacked(), spec);
  const Eigen::MatrixXd c = eps.colwise() - eps.rowwise().mean();
  const Eigen::MatrixXd cov = c * c.transpose() / (T - 1);
  // Entries of a sample covariance of iid N(0, 1) have sd about 1/sqrt(T) = 0.01 (0.014 on the diagonal).
  CHECK((cov - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 0.06);
  const Eigen::VectorXd m = sim.data.m;
  CHECK(std::abs(corr(m, eps.row(kShockMp).transpose())) < 0.05);

  // With beta > 0 the instrument is relevant.
  truth.beta = 0.5;
  Rng rng2(33, 0);
  const SimulationResult sim2 = simulate_dgp(spec, truth, 2000, rng2);
  CHECK(corr(sim2.data.m, sim2.shocks.row(kShockMp).transpose()) > 0.4);
}

TEST_CASE("singular impact is rejected") {
  ModelSpec spec;
  spec.p = 1;
  ParameterDraw d = prior_mean_draw(1, 0.5);
  Rng rng(34, 0);
  const SimulationResult sim = simulate_dgp(spec, d, 10, rng);
  d.tau = sim.tau;
  d.alpha = 0.0;
  CHECK_THROWS(recover_shocks(d, sim.data.stacked(), spec));
}

TEST_CASE("impulse responses at the prior mean") {
  ModelSpec spec;
  spec.p = 1;
  const ParameterDraw d = prior_mean_draw(1, 0.0);
  const Eigen::MatrixXd r = irf(d, spec, 12);
  REQUIRE(r.rows() == kIrfCount);
  REQUIRE(r.cols() == 13);
  CHECK(r(kIrfCr, 0) == 1.0);
  CHECK(r(kIrfR, 0) == 1.0);
  // Phi = 0: the cycle dies after impact and trends never move.
  for (int h = 1; h <= 12; ++h) {
    CHECK(r(kIrfCg, h) == 0.0);
    CHECK(r(kIrfCpi, h) == 0.0);
    CHECK(r(kIrfCr, h) == 0.0);
  }
  for (int v : {kIrfDgStar, kIrfPiStar, kIrfRStar, kIrfGStar})
    for (int h = 0; h <= 12; ++h) CHECK(r(v, h) == 0.0);

  CHECK_THROWS_AS(irf(d, spec, -1), ConfigError);
  CHECK_THROWS_AS(irf(d, spec, 4, 7), ConfigError);
  ModelSpec wrong = spec;
  wrong.p = 2;
  CHECK_THROWS_AS(irf(d, wrong, 4), ConfigError);
}

TEST_CASE("impulse responses: trend constancy and observable composition") {
  Rng rng(35, 0);
  for (int rep = 0; rep < 30; ++rep) {
    const int p = 1 + rep % 3;
    const auto in = testing::random_instance(p, 6, rng);
    for (int shock = 0; shock < 7; ++shock) {
      const Eigen::MatrixXd r = irf(in.draw, in.spec, 16, shock);
      const Matrix7 bt = impact_tilde(in.draw.B, in.draw.beta, in.draw.alpha);
      double err = 0.0;
      for (int h = 0; h <= 16; ++h) {
        for (int v : {kIrfDgStar, kIrfPiStar, kIrfRStar}) err = std::max(err, std::abs(r(v, h) - r(v, 0)));
        err = std::max(err, std::abs(r(kIrfGStar, h) - (h + 1) * r(kIrfDgStar, 0)));
        err = std::max(err, std::abs(r(kIrfG, h) - r(kIrfGStar, h) - r(kIrfCg, h)));
        err = std::max(err, std::abs(r(kIrfPi, h) - r(kIrfPiStar, h) - r(kIrfCpi, h)));
        err = std::max(err,
                       std::abs(r(kIrfR, h) - r(kIrfPiStar, h) - r(kIrfRStar, h) - r(kIrfCr, h)));
      }
      CHECK(err <= 1e-10);
      // Impact column is the shock's column of B-tilde.
      for (int i = 0; i < 6; ++i) CHECK(r(i, 0) == bt(i, shock));
      // Cycle recursion at h = 1 is Phi_1 times the impact.
      const Eigen::Vector3d c1 = in.draw.Phi[0] * bt.col(shock).segment<3>(3);
      CHECK((r.block(kIrfCg, 1, 3, 1) - c1).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("historical decomposition is additive") {
  Rng rng(36, 0);
  for (int p = 1; p <= 4; ++p) {
    ModelSpec spec;
    spec.p = p;
    ParameterDraw truth = prior_mean_draw(p, 0.6);
    if (p > 1) truth.Phi[1] = -0.2 * Matrix3::Identity();
    truth.B(4, 3) = 0.25;
    const SimulationResult sim = simulate_dgp(spec, truth, 60, rng);
    truth.tau = sim.tau;
    const Eigen::VectorXd y = sim.data.stacked();
    const HistoricalDecomposition hd = historical_decomposition(truth, y, spec);
    REQUIRE(hd.contributions.size() == 7);
    CAPTURE(p);
    CHECK(hd.additivity_error() <= 1e-10);
    CHECK((hd.shocks - sim.shocks).cwiseAbs().maxCoeff() < 1e-9);
    // Fitted observables are the data.
    for (int t = 0; t < 60; ++t) {
      CHECK(std::abs(hd.fitted(kHdG, t) - sim.data.g(t)) < 1e-10);
      CHECK(std::abs(hd.fitted(kHdPi, t) - sim.data.pi(t)) < 1e-10);
      CHECK(std::abs(hd.fitted(kHdR, t) - sim.data.r(t)) < 1e-10);
      CHECK(std::abs(hd.fitted(kHdM, t) - sim.data.m(t)) < 1e-10);
    }

    // Zeroing the policy shock and re-simulating gives the counterfactual.
    const StructuralMatrices mats = assemble_structural(spec, truth);
    Eigen::MatrixXd eps = sim.shocks;
    eps.row(kShockMp).setZero();
    std::vector<Vector7> eta(60);
    const Eigen::Vector4d t0 = sim.tau.head<4>();
    Eigen::MatrixXd cf(kHdCount, 60);
    for (int t = 0; t < 60; ++t) {
      Vector7 e = mats.B_tilde * eps.col(t);
      if (t < 2) e += xi_block(t + 1) * t0;
      for (int i = 1; i <= spec.lag_count() && t - i >= 0; ++i) e += mats.A_tilde[i - 1] * eta[t - i];
      eta[t] = e;
      cf(kHdG, t) = e(0) + e(3);
      cf(kHdPi, t) = e(1) + e(4);
      cf(kHdR, t) = e(1) + e(2) + e(5);
    }
    const Eigen::MatrixXd counter = hd.counterfactual();
    double err = 0.0;
    for (int v : {kHdG, kHdPi, kHdR})
      err = std::max(err, (counter.row(v) - cf.row(v)).cwiseAbs().maxCoeff());
    CHECK(err < 1e-9);
  }
}

TEST_CASE("decomposition on arbitrary states and data") {
  // Additivity is an identity, so it must hold off the simulated path too.
  Rng rng(37, 0);
  for (int rep = 0; rep < 20; ++rep) {
    auto in = testing::random_instance(1 + rep % 3, 8, rng);
    in.draw.tau = testing::random_matrix(4 + 3 * 8, 1, 2.0, rng);
    const HistoricalDecomposition hd = historical_decomposition(in.draw, in.y, in.spec);
    CHECK(hd.additivity_error() <= 1e-10);
  }
}

TEST_CASE("quantiles and bands") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({1.0, 2.0}, 0.25) == doctest::Approx(1.25));
  CHECK(quantile({5.0}, 0.84) == 5.0);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.0) == 1.0);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 1.0) == 5.0);
  CHECK_THROWS_AS(quantile({}, 0.5), ConfigError);
  Rng rng(38, 0);
  std::vector<double> v;
  for (int i = 0; i < 20001; ++i) v.push_back(standard_normal(rng));
  const Band b = band_of(v);
  CHECK(b.q16 <= b.q50);
  CHECK(b.q50 <= b.q84);
  CHECK(b.q16 == doctest::Approx(-0.9945).epsilon(0.05));
  CHECK(b.q84 == doctest::Approx(0.9945).epsilon(0.05));
  const Band one = band_of({0.7});
  CHECK(one.q16 == 0.7);
  CHECK(one.q84 == 0.7);
}

TEST_CASE("draw subsets") {
  CHECK(draw_subset(5, 0).size() == 5);
  CHECK(draw_subset(5, 10).size() == 5);
  const auto s = draw_subset(10, 4);
  REQUIRE(s.size() == 4);
  CHECK(s[0] == 0);
  CHECK(s[1] == 2);
  CHECK(s[2] == 5);
  CHECK(s[3] == 7);
}

TEST_CASE("summaries over a chain") {
  Rng rng(39, 0);
  const auto in = testing::random_instance(2, 6, rng);
  const PosteriorChain chain = fake_chain(in, 40, rng);
  std::vector<std::string> dates;
  for (int t = 0; t < 6; ++t) dates.push_back(quarter_label(parse_quarter("2001Q1") + t));

  const IrfSummary irs = summarize_irf(chain, 8);
  CHECK(irs.n_draws == 40);
  for (int v = 0; v < kIrfCount; ++v)
    for (int h = 0; h <= 8; ++h) {
      CHECK(irs.bands[v][h].q16 <= irs.bands[v][h].q50);
      CHECK(irs.bands[v][h].q50 <= irs.bands[v][h].q84);
      CHECK(irs.prob_negative[v][h] >= 0.0);
      CHECK(irs.prob_negative[v][h] <= 1.0);
    }
  CHECK(summarize_irf(chain, 8, kShockMp, 10).n_draws == 10);

  const HdSummary hs = summarize_hd(chain, in.y, dates);
  for (double e : hs.additivity_error) CHECK(e <= 1e-10);
  CHECK_THROWS_AS(summarize_hd(chain, in.y, {"2001Q1"}), ConfigError);

  // A one-draw chain collapses every band.
  PosteriorChain single = chain;
  single.draws.resize(1);
  single.spectral_radius.resize(1);
  const IrfSummary s1 = summarize_irf(single, 4);
  const Eigen::MatrixXd r = irf(single.draws[0], single.spec, 4);
  for (int v = 0; v < kIrfCount; ++v)
    for (int h = 0; h <= 4; ++h) {
      CHECK(s1.bands[v][h].q16 == r(v, h));
      CHECK(s1.bands[v][h].q84 == r(v, h));
    }
  const TrendSummary ts = summarize_trends(single, dates);
  CHECK(ts.bands[0][0].q50 == single.draws[0].tau(kTau0));
  CHECK(ts.bands[1][0].q50 == single.draws[0].tau(kTau0) - single.draws[0].tau(1));

  PosteriorChain empty = chain;
  empty.draws.clear();
  CHECK_THROWS_AS(summarize_irf(empty, 4), ConfigError);
}

TEST_CASE("summary CSV layout") {
  Rng rng(40, 0);
  const auto in = testing::random_instance(1, 4, rng);
  const PosteriorChain chain = fake_chain(in, 5, rng);
  const std::vector<std::string> dates = {"2001Q1", "2001Q2", "2001Q3", "2001Q4"};
  const std::string a = irf_csv(summarize_irf(chain, 3));
  CHECK(a.rfind("variable,horizon,q16,q50,q84,prob_negative\n", 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 1 + kIrfCount * 4);
  CHECK(a.find("\nr,0,") != std::string::npos);
  const std::string b = hd_csv(summarize_hd(chain, in.y, dates));
  CHECK(b.rfind("date,variable,fitted_q16,", 0) == 0);
  CHECK(std::count(b.begin(), b.end(), '\n') == 1 + kHdCount * 4);
  const std::string c = trends_csv(summarize_trends(chain, dates));
  CHECK(c.rfind("date,variable,q16,q50,q84\n2001Q1,g_star,", 0) == 0);
  CHECK(std::count(c.begin(), c.end(), '\n') == 1 + 4 * 4);
}

TEST_CASE("trend bands cover the simulated trends at their nominal rate") {
  // Given the true parameters the states are drawn from their exact
  // conditional, and the simulated path is itself a draw from it, so 68% bands
  // cover at 68% on average.
  ModelSpec spec;
  spec.p = 1;
  ParameterDraw truth = prior_mean_draw(1, 0.5);
  const int T = 50, reps = 20, draws = 400;
  std::vector<std::string> dates;
  for (int t = 0; t < T; ++t) dates.push_back(quarter_label(parse_quarter("2000Q1") + t));
  int hit = 0, total = 0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(41, rep);
    const SimulationResult sim = simulate_dgp(spec, truth, T, rng);
    const Eigen::VectorXd y = sim.data.stacked();
    PosteriorChain chain;
    chain.spec = spec;
    chain.T = T;
    for (int k = 0; k < draws; ++k) {
      ParameterDraw d = truth;
      d.tau = step_states(truth, y, spec, rng);
      chain.draws.push_back(d);
    }
    const TrendSummary ts = summarize_trends(chain, dates);
    double prev = sim.tau(1);
    for (int t = 0; t < T; ++t) {
      const double g = sim.tau(kTau0 + 3 * t);
      const double truth_v[4] = {g, g - prev, sim.tau(kTau0 + 3 * t + 1), sim.tau(kTau0 + 3 * t + 2)};
      prev = g;
      for (int v = 0; v < 4; ++v) {
        hit += ts.bands[v][t].q16 <= truth_v[v] && truth_v[v] <= ts.bands[v][t].q84;
        ++total;
      }
    }
  }
  const double rate = static_cast<double>(hit) / total;
  // Points are correlated along the path; 0.06 is several effective SEs.
  CHECK(rate == doctest::Approx(0.68).epsilon(0.06 / 0.68));
  MESSAGE("trend band coverage " << rate);
}
