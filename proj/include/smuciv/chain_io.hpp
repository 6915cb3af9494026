#pragma once

#include <string>
#include <vector>

#include "smuciv/mcmc.hpp"

namespace smuciv {

// Column names of the draw table for lag order p and T periods, in the order
// they are written.
std::vector<std::string> chain_columns(int p, int T);

// Writes the draws to `csv_path` and the spec, sampler settings and
// diagnostics to the sibling file with extension .json.
void save_chain(const PosteriorChain& chain, const std::string& csv_path);
PosteriorChain load_chain(const std::string& csv_path);

std::string sidecar_path(const std::string& csv_path);

}  // namespace smuciv
