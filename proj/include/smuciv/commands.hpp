#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "smuciv/run_config.hpp"

namespace smuciv {

// Loads the dataset named by the config (prepared file or raw series).
Dataset load_data(const RunConfig& config);

// Spec with the data-dependent prior filled in.
ModelSpec build_spec(const RunConfig& config, const Dataset& data, Variant variant);

// Concatenates the draws of chains that share spec and T.
PosteriorChain pool_chains(const std::vector<PosteriorChain>& chains);

// Each returns the list of files written. Progress goes to `log`.
std::vector<std::string> cmd_estimate(const RunConfig& config, std::ostream& log);
std::vector<std::string> cmd_compare(const RunConfig& config, std::ostream& log);
std::vector<std::string> cmd_analyze(const RunConfig& config, std::ostream& log);
std::vector<std::string> cmd_simulate(const RunConfig& config, std::ostream& log);

// Entry point of the executable: 0 ok, 1 numerical failure, 2 IO/config.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace smuciv
