#include "smuciv/commands.hpp"

#include <exception>
#include <filesystem>
#include <thread>

#include "smuciv/chain_io.hpp"
#include "smuciv/csv.hpp"
#include "smuciv/errors.hpp"
#include "smuciv/structural.hpp"

namespace smuciv {

namespace {

namespace fs = std::filesystem;

void ensure_output_dir(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec || !fs::is_directory(c.output_dir))
    throw IoError("cannot create output directory '" + c.output_dir + "'");
}

std::string out_path(const RunConfig& c, const std::string& name) {
  return (fs::path(c.output_dir) / name).string();
}

// Runs one chain per index on its own thread and rethrows the first failure
// (lowest chain index) after all threads finish.
std::vector<PosteriorChain> run_chains(const ModelSpec& spec, const Dataset& data,
                                       const SamplerConfig& base, int n_chains) {
  std::vector<PosteriorChain> chains(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);
  auto work = [&](int i) {
    try {
      SamplerConfig cfg = base;
      cfg.chain_index = i;
      chains[i] = run_chain(spec, data, cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (n_chains == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < n_chains; ++i) threads.emplace_back(work, i);
    for (auto& t : threads) t.join();
  }
  for (int i = 0; i < n_chains; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const NumericalError& e) {
      throw NumericalError("chain " + std::to_string(i) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("chain " + std::to_string(i) + ": " + e.what());
    } catch (const IoError& e) {
      throw IoError("chain " + std::to_string(i) + ": " + e.what());
    } catch (const std::exception& e) {
      throw NumericalError("chain " + std::to_string(i) + ": " + e.what());
    }
  }
  return chains;
}

// Labels failures with the step they came from, keeping the error class.
template <class F>
auto labeled(const std::string& step, F&& f) {
  try {
    return f();
  } catch (const NumericalError& e) {
    throw NumericalError(step + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(step + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(step + ": " + e.what());
  }
}

}  // namespace

Dataset load_data(const RunConfig& c) {
  if (!c.data.empty()) return read_dataset_csv(c.data);
  if (c.has_raw_series()) return ingest(c.ingest);
  throw ConfigError("no data: set 'data' or the raw series paths (gdp_path, ...)");
}

ModelSpec build_spec(const RunConfig& c, const Dataset& data, Variant variant) {
  PriorConfig base;
  base.V_b = c.V_b;
  base.V_beta = c.V_beta;
  base.V_alpha = c.V_alpha;
  base.alpha0 = c.alpha0;
  ModelSpec spec;
  spec.p = c.p;
  spec.variant = variant;
  spec.prior = data_prior(data, c.p, base);
  spec.validate();
  return spec;
}

PosteriorChain pool_chains(const std::vector<PosteriorChain>& chains) {
  if (chains.empty()) throw ConfigError("no chains to pool");
  PosteriorChain out = chains.front();
  for (std::size_t i = 1; i < chains.size(); ++i) {
    const PosteriorChain& c = chains[i];
    if (c.T != out.T || c.spec.p != out.spec.p || c.spec.variant != out.spec.variant)
      throw ConfigError("chains disagree on T, p or variant");
    out.draws.insert(out.draws.end(), c.draws.begin(), c.draws.end());
    out.spectral_radius.insert(out.spectral_radius.end(), c.spectral_radius.begin(),
                               c.spectral_radius.end());
  }
  return out;
}

std::vector<std::string> cmd_estimate(const RunConfig& c, std::ostream& log) {
  const Dataset data = labeled("load data", [&] { return load_data(c); });
  const ModelSpec spec = labeled("prior", [&] { return build_spec(c, data, c.variant); });
  ensure_output_dir(c);
  log << "estimate: " << to_string(c.variant) << ", p = " << c.p << ", T = " << data.T() << ", "
      << c.n_chains << " chain(s)\n";
  const auto chains = labeled("sampler", [&] { return run_chains(spec, data, c.sampler, c.n_chains); });

  std::vector<std::string> files;
  for (int i = 0; i < c.n_chains; ++i) {
    const std::string path = c.chain_path(i);
    save_chain(chains[i], path);
    files.push_back(path);
    files.push_back(sidecar_path(path));
    log << "  chain " << i << ": accept rate B = " << chains[i].accept_rate_B << "\n";
  }
  const PosteriorChain pooled = pool_chains(chains);
  const std::string trends = out_path(c, "trends.csv");
  write_text(trends, trends_csv(summarize_trends(pooled, data.dates)));
  files.push_back(trends);
  return files;
}

std::vector<std::string> cmd_compare(const RunConfig& c, std::ostream& log) {
  if (c.variants.empty()) throw ConfigError("compare needs at least one entry in 'variants'");
  const Dataset data = labeled("load data", [&] { return load_data(c); });
  const Eigen::VectorXd y = data.stacked();
  ensure_output_dir(c);
  std::vector<CompareRow> rows;
  std::vector<std::string> files;
  for (Variant v : c.variants) {
    const std::string name = to_string(v);
    const ModelSpec spec = labeled("prior", [&] { return build_spec(c, data, v); });
    const PosteriorChain chain =
        labeled("sampler " + name, [&] { return run_chain(spec, data, c.sampler); });
    const std::string path = c.variant_chain_path(v);
    save_chain(chain, path);
    files.push_back(path);
    files.push_back(sidecar_path(path));
    const MarglikResult r =
        labeled("marginal likelihood " + name, [&] { return estimate_ml(chain, y, c.estimator); });
    log << "compare: " << name << " log-ML " << r.log_ml << " (se " << r.mc_se << ")\n";
    rows.push_back({name, r});
  }
  const std::string table = out_path(c, "compare.csv");
  write_text(table, compare_csv(rows));
  files.push_back(table);
  return files;
}

std::vector<std::string> cmd_analyze(const RunConfig& c, std::ostream& log) {
  const Dataset data = labeled("load data", [&] { return load_data(c); });
  std::vector<PosteriorChain> chains;
  for (int i = 0; i < c.n_chains; ++i)
    chains.push_back(labeled("load chain", [&] { return load_chain(c.chain_path(i)); }));
  const PosteriorChain pooled = pool_chains(chains);
  if (pooled.T != data.T())
    throw ConfigError("chain has T = " + std::to_string(pooled.T) + " but the data has " +
                      std::to_string(data.T()));
  ensure_output_dir(c);
  const IrfSummary is =
      labeled("irf", [&] { return summarize_irf(pooled, c.H, c.shock, c.analyze_max_draws); });
  const HdSummary hs = labeled("historical decomposition", [&] {
    return summarize_hd(pooled, data.stacked(), data.dates, c.analyze_max_draws);
  });
  log << "analyze: " << is.n_draws << " draws, " << is.n_explosive << " with explosive cycles\n";
  const std::string irf_path = out_path(c, "irf.csv"), hd_path = out_path(c, "hd.csv");
  write_text(irf_path, irf_csv(is));
  write_text(hd_path, hd_csv(hs));
  return {irf_path, hd_path};
}

std::vector<std::string> cmd_simulate(const RunConfig& c, std::ostream& log) {
  ModelSpec spec;
  spec.p = c.p;
  spec.variant = c.variant;
  spec.prior.V_b = c.V_b;
  spec.prior.V_beta = c.V_beta;
  spec.prior.V_alpha = c.V_alpha;
  spec.prior.alpha0 = c.alpha0;
  spec.validate();
  ParameterDraw truth = initial_draw(spec);
  truth.Phi[0].diagonal().setConstant(c.sim_phi_diag);
  if (beta_free(c.variant)) truth.beta = 0.5;
  Rng rng(c.sampler.seed, 0);
  const SimulationResult sim = labeled("simulate", [&] { return simulate_dgp(spec, truth, c.sim_T, rng); });
  const fs::path parent = fs::path(c.sim_output).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  write_dataset_csv(c.sim_output, sim.data);
  log << "simulate: T = " << c.sim_T << " written to " << c.sim_output << "\n";
  return {c.sim_output};
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig c = parse_command_line(argc, argv);
    std::vector<std::string> files;
    if (c.command == "estimate")
      files = cmd_estimate(c, out);
    else if (c.command == "compare")
      files = cmd_compare(c, out);
    else if (c.command == "analyze")
      files = cmd_analyze(c, out);
    else
      files = cmd_simulate(c, out);
    for (const auto& f : files) out << "wrote " << f << "\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace smuciv
