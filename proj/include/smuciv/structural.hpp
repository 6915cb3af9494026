#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smuciv/mcmc.hpp"

namespace smuciv {

// eps_t = B-tilde^{-1} (eta_t - sum_i A_i eta_{t-i} - Xi_t tau0), 7 x T.
// Throws NumericalError when B-tilde is singular.
Eigen::MatrixXd recover_shocks(const ParameterDraw& draw, const Eigen::VectorXd& y,
                               const ModelSpec& spec);

// Rows of an impulse response, in this order.
enum IrfVar { kIrfDgStar, kIrfPiStar, kIrfRStar, kIrfCg, kIrfCpi, kIrfCr, kIrfG, kIrfPi, kIrfR,
              kIrfGStar, kIrfCount };
const std::vector<std::string>& irf_variable_names();

// Responses (kIrfCount x (H + 1)) to a one-standard-deviation structural
// shock. Trend differences are propagated through their own equations, so
// the trend rows are constant across horizons.
Eigen::MatrixXd irf(const ParameterDraw& draw, const ModelSpec& spec, int H,
                    int shock_index = kShockMp);

// Rows of a historical decomposition, in this order.
enum HdVar { kHdGStar, kHdDgStar, kHdPiStar, kHdRStar, kHdCg, kHdCpi, kHdCr, kHdG, kHdPi, kHdR,
             kHdM, kHdCount };
const std::vector<std::string>& hd_variable_names();

struct HistoricalDecomposition {
  // contributions[j] is kHdCount x T for shock j = 0..6.
  std::vector<Eigen::MatrixXd> contributions;
  Eigen::MatrixXd deterministic;  // initial states propagated with zero shocks
  Eigen::MatrixXd fitted;         // implied by tau and y
  Eigen::MatrixXd shocks;         // 7 x T

  Eigen::MatrixXd counterfactual(int shock_index = kShockMp) const {
    return fitted - contributions[shock_index];
  }
  // max |fitted - deterministic - sum_j contributions_j|
  double additivity_error() const;
};

HistoricalDecomposition historical_decomposition(const ParameterDraw& draw, const Eigen::VectorXd& y,
                                                 const ModelSpec& spec);

// Pointwise quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double prob);

struct Band {
  double q16 = 0.0, q50 = 0.0, q84 = 0.0;
};
Band band_of(const std::vector<double>& values);

struct IrfSummary {
  int H = 0;
  // [variable][horizon]
  std::vector<std::vector<Band>> bands;
  std::vector<std::vector<double>> prob_negative;
  std::size_t n_draws = 0;
  std::size_t n_explosive = 0;
};
// max_draws > 0 uses that many evenly spaced draws; 0 uses all of them.
IrfSummary summarize_irf(const PosteriorChain& chain, int H, int shock_index = kShockMp,
                         std::size_t max_draws = 0);

struct HdSummary {
  std::vector<std::string> dates;
  // [variable][t]
  std::vector<std::vector<Band>> fitted, mp_contribution, counterfactual;
  std::vector<double> additivity_error;  // per t, maximum over draws and variables
};
HdSummary summarize_hd(const PosteriorChain& chain, const Eigen::VectorXd& y,
                       const std::vector<std::string>& dates, std::size_t max_draws = 0);

// Indices of at most max_draws evenly spaced draws (all when max_draws = 0).
std::vector<std::size_t> draw_subset(std::size_t n, std::size_t max_draws);

// g*, dg*, pi*, r* paths from the stored states.
struct TrendSummary {
  std::vector<std::string> dates;
  std::vector<std::string> variables;
  std::vector<std::vector<Band>> bands;  // [variable][t]
};
TrendSummary summarize_trends(const PosteriorChain& chain, const std::vector<std::string>& dates);

std::string irf_csv(const IrfSummary& s);
std::string hd_csv(const HdSummary& s);
std::string trends_csv(const TrendSummary& s);

}  // namespace smuciv
