#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smuciv/model.hpp"
#include "smuciv/rng.hpp"

namespace smuciv {

// Quarterly observations used by the model.
struct Dataset {
  std::vector<std::string> dates;  // "YYYYQn"
  Eigen::VectorXd g;   // 100 log real GDP
  Eigen::VectorXd pi;  // 400 dlog deflator
  Eigen::VectorXd r;   // interest rate, percent
  Eigen::VectorXd m;   // external instrument
  std::vector<std::string> transform_log;

  int T() const { return static_cast<int>(g.size()); }
  // (g_t, pi_t, r_t, m_t) stacked over t.
  Eigen::VectorXd stacked() const;
  void validate() const;
  bool operator==(const Dataset& other) const;
};

struct SeriesSource {
  std::string path;
  std::string column = "value";
};

struct IngestOptions {
  SeriesSource gdp;         // quarterly levels
  SeriesSource deflator;    // quarterly levels
  SeriesSource rate;        // monthly, percent
  SeriesSource instrument;  // monthly
  SeriesSource shadow;      // monthly, optional
  bool use_shadow_rate = false;
  double elb_threshold = 0.25;
  std::string sample_start;  // "1987Q4", empty = earliest common quarter
  std::string sample_end;    // "2023Q4", empty = latest common quarter
};

// Reads raw series, applies 100 log to GDP and 400 dlog to the deflator,
// averages monthly series within quarters and trims to the common sample.
Dataset ingest(const IngestOptions& options);

// Wide already-transformed file with columns date,g,pi,r,m. Lines starting
// with '#' carry the transformation log.
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& data);

// Quarter helpers: "1987Q4" <-> 4 * year + (quarter - 1).
int parse_quarter(const std::string& label);
std::string quarter_label(int key);

struct SimulationResult {
  Dataset data;
  Eigen::VectorXd tau;     // full state path including the initial states
  Eigen::MatrixXd shocks;  // 7 x T structural shocks (6 model shocks, then v_t)
};

// Iterates the augmented VAR forward from the given parameters. tau0 is
// drawn from the prior unless supplied.
SimulationResult simulate_dgp(const ModelSpec& spec, const ParameterDraw& truth, int T, Rng& rng,
                              std::optional<Eigen::Vector4d> tau0 = std::nullopt);

}  // namespace smuciv
