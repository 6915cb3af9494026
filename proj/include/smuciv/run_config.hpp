#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "smuciv/data_io.hpp"
#include "smuciv/marglik.hpp"
#include "smuciv/mcmc.hpp"

namespace smuciv {

using KeyValues = std::map<std::string, std::string>;

// Flat settings for every command. Keys and defaults are listed in
// config_keys(); the README documents them.
struct RunConfig {
  std::string command;

  // Either a prepared wide file (date,g,pi,r,m) ...
  std::string data;
  // ... or raw series that go through ingest().
  IngestOptions ingest;

  int p = 4;
  Variant variant = Variant::Baseline;
  double V_b = 0.01;
  double V_beta = 1.0;
  double V_alpha = 1.0;
  double alpha0 = 0.0;

  SamplerConfig sampler;
  int n_chains = 1;
  std::string output_dir = "out";

  std::vector<Variant> variants;  // compare
  Estimator estimator = Estimator::CMGD;

  int H = 40;  // analyze
  int shock = kShockMp;
  std::size_t analyze_max_draws = 2000;

  int sim_T = 200;  // simulate
  double sim_phi_diag = 0.5;
  std::string sim_output;  // default <output_dir>/simulated.csv

  bool has_raw_series() const { return !ingest.gdp.path.empty(); }
  std::string chain_path(int chain) const;
  std::string variant_chain_path(Variant v) const;
};

// Known keys with their default values as text.
const KeyValues& config_keys();

// `key = value` lines; '#' starts a comment; blank lines are ignored.
// Throws IoError for a missing file and ConfigError for malformed lines or
// unknown keys.
KeyValues read_config_file(const std::string& path);

// Applies defaults, then the file, then the overrides.
RunConfig make_run_config(const std::string& command, const KeyValues& file,
                          const KeyValues& overrides);

// argv is `smuciv <command> [--config file] [--key value | --key=value]...`.
RunConfig parse_command_line(int argc, const char* const* argv);

}  // namespace smuciv
