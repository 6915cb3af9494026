#include "smuciv/structural.hpp"

#include <algorithm>
#include <cmath>

#include "smuciv/csv.hpp"
#include "smuciv/errors.hpp"

namespace smuciv {

Eigen::MatrixXd recover_shocks(const ParameterDraw& draw, const Eigen::VectorXd& y,
                               const ModelSpec& spec) {
  const int T = static_cast<int>(y.size() / 4);
  const StructuralMatrices mats = assemble_structural(spec, draw);
  const Eigen::PartialPivLU<Matrix7> lu(mats.B_tilde);
  if (!(std::abs(lu.determinant()) > 0) || lu.rcond() < 1e-14)
    throw NumericalError("B-tilde is singular; structural shocks are not identified");
  return lu.solve(structural_residuals(mats, draw.tau, y, T));
}

const std::vector<std::string>& irf_variable_names() {
  static const std::vector<std::string> names = {"dg_star", "pi_star", "r_star", "c_g", "c_pi",
                                                 "c_r",     "g",       "pi",     "r",   "g_star"};
  return names;
}

const std::vector<std::string>& hd_variable_names() {
  static const std::vector<std::string> names = {"g_star", "dg_star", "pi_star", "r_star",
                                                 "c_g",    "c_pi",    "c_r",     "g",
                                                 "pi",     "r",       "m"};
  return names;
}

Eigen::MatrixXd irf(const ParameterDraw& draw, const ModelSpec& spec, int H, int shock_index) {
  if (H < 0) throw ConfigError("IRF horizon must be >= 0");
  if (shock_index < 0 || shock_index > 6) throw ConfigError("shock index must lie in 0..6");
  const int p = static_cast<int>(draw.Phi.size());
  if (p != spec.p) throw ConfigError("draw does not match the lag order");
  const Vector7 v = impact_tilde(draw.B, draw.beta, draw.alpha).col(shock_index);

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(kIrfCount, H + 1);
  std::vector<Eigen::Vector3d> c(H + 1);
  Eigen::Vector3d trend_diff = Eigen::Vector3d::Zero();  // (dg*, pi*, r*)
  double g_star = 0.0;
  for (int h = 0; h <= H; ++h) {
    // Innovations to (d2 g*, d pi*, d r*) hit only on impact.
    const Eigen::Vector3d impulse = h == 0 ? Eigen::Vector3d(v.head<3>()) : Eigen::Vector3d::Zero();
    trend_diff += impulse;
    g_star += trend_diff(0);
    Eigen::Vector3d ch = h == 0 ? Eigen::Vector3d(v.segment<3>(3)) : Eigen::Vector3d::Zero();
    for (int l = 1; l <= p && h - l >= 0; ++l) ch.noalias() += draw.Phi[l - 1] * c[h - l];
    c[h] = ch;
    out(kIrfDgStar, h) = trend_diff(0);
    out(kIrfPiStar, h) = trend_diff(1);
    out(kIrfRStar, h) = trend_diff(2);
    out(kIrfCg, h) = ch(0);
    out(kIrfCpi, h) = ch(1);
    out(kIrfCr, h) = ch(2);
    out(kIrfGStar, h) = g_star;
    out(kIrfG, h) = g_star + ch(0);
    out(kIrfPi, h) = trend_diff(1) + ch(1);
    out(kIrfR, h) = trend_diff(1) + trend_diff(2) + ch(2);
  }
  return out;
}

namespace {

// Maps the 7 x (T + 1) eta-tilde path (column 0 holds the period-0 trends)
// to the decomposition variables for t = 1..T.
Eigen::MatrixXd hd_rows(const Eigen::MatrixXd& x) {
  const int T = static_cast<int>(x.cols()) - 1;
  Eigen::MatrixXd out(kHdCount, T);
  for (int t = 1; t <= T; ++t) {
    const int c = t - 1;
    out(kHdGStar, c) = x(0, t);
    out(kHdDgStar, c) = x(0, t) - x(0, t - 1);
    out(kHdPiStar, c) = x(1, t);
    out(kHdRStar, c) = x(2, t);
    out(kHdCg, c) = x(3, t);
    out(kHdCpi, c) = x(4, t);
    out(kHdCr, c) = x(5, t);
    out(kHdG, c) = x(0, t) + x(3, t);
    out(kHdPi, c) = x(1, t) + x(4, t);
    out(kHdR, c) = x(1, t) + x(2, t) + x(5, t);
    out(kHdM, c) = x(6, t);
  }
  return out;
}

}  // namespace

double HistoricalDecomposition::additivity_error() const {
  Eigen::MatrixXd rest = fitted - deterministic;
  for (const auto& c : contributions) rest -= c;
  return rest.cwiseAbs().maxCoeff();
}

HistoricalDecomposition historical_decomposition(const ParameterDraw& draw, const Eigen::VectorXd& y,
                                                 const ModelSpec& spec) {
  const int T = static_cast<int>(y.size() / 4);
  const StructuralMatrices mats = assemble_structural(spec, draw);
  const int L = static_cast<int>(mats.A_tilde.size());
  HistoricalDecomposition hd;
  hd.shocks = recover_shocks(draw, y, spec);
  const Eigen::Vector4d tau0 = draw.tau.head<4>();

  auto propagate = [&](auto&& forcing, const Vector7& x0) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(7, T + 1);
    x.col(0) = x0;
    for (int t = 1; t <= T; ++t) {
      Vector7 e = forcing(t);
      // Pre-sample values enter only through Xi; column 0 is a label holder.
      for (int i = 1; i <= L && t - i >= 1; ++i) e.noalias() += mats.A_tilde[i - 1] * x.col(t - i);
      x.col(t) = e;
    }
    return x;
  };

  Vector7 pre = Vector7::Zero();
  pre(0) = tau0(1);
  pre(1) = tau0(2);
  pre(2) = tau0(3);
  const Eigen::MatrixXd det = propagate(
      [&](int t) -> Vector7 { return t <= 2 ? Vector7(xi_block(t) * tau0) : Vector7::Zero(); }, pre);
  hd.deterministic = hd_rows(det);

  for (int j = 0; j < 7; ++j) {
    const Vector7 col = mats.B_tilde.col(j);
    const Eigen::MatrixXd x = propagate(
        [&](int t) -> Vector7 { return col * hd.shocks(j, t - 1); }, Vector7::Zero());
    hd.contributions.push_back(hd_rows(x));
  }

  Eigen::MatrixXd fit(7, T + 1);
  fit.col(0) = pre;
  fit.rightCols(T) = eta_path(draw.tau, y, T);
  hd.fitted = hd_rows(fit);
  return hd;
}

double quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = prob * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || v[lo] == v[hi]) return v[lo];
  return v[lo] + frac * (v[hi] - v[lo]);
}

Band band_of(const std::vector<double>& values) {
  return {quantile(values, 0.16), quantile(values, 0.50), quantile(values, 0.84)};
}

std::vector<std::size_t> draw_subset(std::size_t n, std::size_t max_draws) {
  std::vector<std::size_t> idx;
  if (max_draws == 0 || max_draws >= n) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    return idx;
  }
  for (std::size_t k = 0; k < max_draws; ++k) idx.push_back(k * n / max_draws);
  return idx;
}

IrfSummary summarize_irf(const PosteriorChain& chain, int H, int shock_index, std::size_t max_draws) {
  if (chain.draws.empty()) throw ConfigError("chain has no draws");
  const std::vector<std::size_t> idx = draw_subset(chain.draws.size(), max_draws);
  std::vector<std::vector<std::vector<double>>> vals(
      kIrfCount, std::vector<std::vector<double>>(H + 1));
  IrfSummary s;
  s.H = H;
  s.n_draws = idx.size();
  for (std::size_t i : idx) {
    const ParameterDraw& d = chain.draws[i];
    const double rho = i < chain.spectral_radius.size() ? chain.spectral_radius[i]
                                                         : cycle_spectral_radius(d.Phi);
    if (rho >= 1.0) ++s.n_explosive;
    const Eigen::MatrixXd r = irf(d, chain.spec, H, shock_index);
    for (int v = 0; v < kIrfCount; ++v)
      for (int h = 0; h <= H; ++h) vals[v][h].push_back(r(v, h));
  }
  s.bands.assign(kIrfCount, std::vector<Band>(H + 1));
  s.prob_negative.assign(kIrfCount, std::vector<double>(H + 1));
  for (int v = 0; v < kIrfCount; ++v)
    for (int h = 0; h <= H; ++h) {
      s.bands[v][h] = band_of(vals[v][h]);
      const auto neg = std::count_if(vals[v][h].begin(), vals[v][h].end(), [](double x) { return x < 0; });
      s.prob_negative[v][h] = static_cast<double>(neg) / static_cast<double>(vals[v][h].size());
    }
  return s;
}

HdSummary summarize_hd(const PosteriorChain& chain, const Eigen::VectorXd& y,
                       const std::vector<std::string>& dates, std::size_t max_draws) {
  if (chain.draws.empty()) throw ConfigError("chain has no draws");
  const int T = chain.T;
  if (static_cast<int>(dates.size()) != T) throw ConfigError("dates do not match the chain length");
  const std::vector<std::size_t> idx = draw_subset(chain.draws.size(), max_draws);
  using Cube = std::vector<std::vector<std::vector<double>>>;
  Cube fit(kHdCount, std::vector<std::vector<double>>(T)), mp = fit, cf = fit;
  HdSummary s;
  s.dates = dates;
  s.additivity_error.assign(T, 0.0);
  for (std::size_t i : idx) {
    const HistoricalDecomposition hd = historical_decomposition(chain.draws[i], y, chain.spec);
    Eigen::MatrixXd rest = hd.fitted - hd.deterministic;
    for (const auto& c : hd.contributions) rest -= c;
    const Eigen::MatrixXd counter = hd.counterfactual();
    for (int t = 0; t < T; ++t) {
      s.additivity_error[t] = std::max(s.additivity_error[t], rest.col(t).cwiseAbs().maxCoeff());
      for (int v = 0; v < kHdCount; ++v) {
        fit[v][t].push_back(hd.fitted(v, t));
        mp[v][t].push_back(hd.contributions[kShockMp](v, t));
        cf[v][t].push_back(counter(v, t));
      }
    }
  }
  auto reduce = [T](const Cube& c) {
    std::vector<std::vector<Band>> out(kHdCount, std::vector<Band>(T));
    for (int v = 0; v < kHdCount; ++v)
      for (int t = 0; t < T; ++t) out[v][t] = band_of(c[v][t]);
    return out;
  };
  s.fitted = reduce(fit);
  s.mp_contribution = reduce(mp);
  s.counterfactual = reduce(cf);
  return s;
}

TrendSummary summarize_trends(const PosteriorChain& chain, const std::vector<std::string>& dates) {
  if (chain.draws.empty()) throw ConfigError("chain has no draws");
  const int T = chain.T;
  if (static_cast<int>(dates.size()) != T) throw ConfigError("dates do not match the chain length");
  TrendSummary s;
  s.dates = dates;
  s.variables = {"g_star", "dg_star", "pi_star", "r_star"};
  std::vector<std::vector<std::vector<double>>> vals(4, std::vector<std::vector<double>>(T));
  for (const ParameterDraw& d : chain.draws) {
    double prev = d.tau(1);  // g*_0
    for (int t = 0; t < T; ++t) {
      const double g = d.tau(kTau0 + 3 * t);
      vals[0][t].push_back(g);
      vals[1][t].push_back(g - prev);
      vals[2][t].push_back(d.tau(kTau0 + 3 * t + 1));
      vals[3][t].push_back(d.tau(kTau0 + 3 * t + 2));
      prev = g;
    }
  }
  s.bands.assign(4, std::vector<Band>(T));
  for (int v = 0; v < 4; ++v)
    for (int t = 0; t < T; ++t) s.bands[v][t] = band_of(vals[v][t]);
  return s;
}

namespace {

std::string band_fields(const Band& b) {
  return format_double(b.q16) + "," + format_double(b.q50) + "," + format_double(b.q84);
}

}  // namespace

std::string irf_csv(const IrfSummary& s) {
  std::string out = "variable,horizon,q16,q50,q84,prob_negative\n";
  const auto& names = irf_variable_names();
  for (int v = 0; v < kIrfCount; ++v)
    for (int h = 0; h <= s.H; ++h)
      out += names[v] + "," + std::to_string(h) + "," + band_fields(s.bands[v][h]) + "," +
             format_double(s.prob_negative[v][h]) + "\n";
  return out;
}

std::string hd_csv(const HdSummary& s) {
  std::string out =
      "date,variable,fitted_q16,fitted_q50,fitted_q84,mp_q16,mp_q50,mp_q84,"
      "counterfactual_q16,counterfactual_q50,counterfactual_q84,additivity_error\n";
  const auto& names = hd_variable_names();
  for (int v = 0; v < kHdCount; ++v)
    for (std::size_t t = 0; t < s.dates.size(); ++t)
      out += s.dates[t] + "," + names[v] + "," + band_fields(s.fitted[v][t]) + "," +
             band_fields(s.mp_contribution[v][t]) + "," + band_fields(s.counterfactual[v][t]) + "," +
             format_double(s.additivity_error[t]) + "\n";
  return out;
}

std::string trends_csv(const TrendSummary& s) {
  std::string out = "date,variable,q16,q50,q84\n";
  for (std::size_t v = 0; v < s.variables.size(); ++v)
    for (std::size_t t = 0; t < s.dates.size(); ++t)
      out += s.dates[t] + "," + s.variables[v] + "," + band_fields(s.bands[v][t]) + "\n";
  return out;
}

}  // namespace smuciv
