#include "smuciv/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <sstream>

#include "CLI11.hpp"
#include "smuciv/csv.hpp"
#include "smuciv/errors.hpp"

namespace smuciv {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class Int>
Int to_int(const std::string& key, const std::string& text) {
  Int v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  return v;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    return parse_double(text, "key '" + key + "'");
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + text + "'");
}

Variant to_variant(const std::string& key, const std::string& text) {
  try {
    return parse_variant(text);
  } catch (const Error&) {
    throw ConfigError("key '" + key + "': unknown variant '" + text + "'");
  }
}

void check_key(const std::string& key) {
  if (!config_keys().count(key)) throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

const KeyValues& config_keys() {
  static const KeyValues keys = {
      {"data", ""},
      {"gdp_path", ""},
      {"gdp_column", "value"},
      {"deflator_path", ""},
      {"deflator_column", "value"},
      {"rate_path", ""},
      {"rate_column", "value"},
      {"instrument_path", ""},
      {"instrument_column", "value"},
      {"shadow_path", ""},
      {"shadow_column", "value"},
      {"use_shadow_rate", "false"},
      {"elb_threshold", "0.25"},
      {"sample_start", ""},
      {"sample_end", ""},
      {"p", "4"},
      {"variant", "Baseline"},
      {"V_b", "0.01"},
      {"V_beta", "1"},
      {"V_alpha", "1"},
      {"alpha0", "0"},
      {"n_burn", "20000"},
      {"n_keep", "20000"},
      {"thin", "1"},
      {"seed", "1"},
      {"mh_target_accept", "0.3"},
      {"mh_steps", "10"},
      {"n_chains", "1"},
      {"output_dir", "out"},
      {"variants", "Baseline,R1,R2,R3,R4"},
      {"estimator", "CMGD"},
      {"H", "40"},
      {"shock", "5"},
      {"analyze_max_draws", "2000"},
      {"sim_T", "200"},
      {"sim_phi_diag", "0.5"},
      {"sim_output", ""},
  };
  return keys;
}

std::string RunConfig::chain_path(int chain) const {
  return (std::filesystem::path(output_dir) / ("chain_" + std::to_string(chain) + ".csv")).string();
}

std::string RunConfig::variant_chain_path(Variant v) const {
  return (std::filesystem::path(output_dir) / ("chain_" + to_string(v) + ".csv")).string();
}

KeyValues read_config_file(const std::string& path) {
  KeyValues kv;
  int n = 0;
  for (const std::string& raw : read_lines(path)) {
    ++n;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(n) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    check_key(key);
    kv[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return kv;
}

RunConfig make_run_config(const std::string& command, const KeyValues& file,
                          const KeyValues& overrides) {
  KeyValues kv = config_keys();
  for (const auto& src : {file, overrides})
    for (const auto& [k, v] : src) {
      check_key(k);
      kv[k] = v;
    }

  RunConfig c;
  c.command = command;
  c.data = kv["data"];
  auto source = [&](const std::string& stem) {
    return SeriesSource{kv[stem + "_path"], kv[stem + "_column"]};
  };
  c.ingest.gdp = source("gdp");
  c.ingest.deflator = source("deflator");
  c.ingest.rate = source("rate");
  c.ingest.instrument = source("instrument");
  c.ingest.shadow = source("shadow");
  c.ingest.use_shadow_rate = to_bool("use_shadow_rate", kv["use_shadow_rate"]);
  c.ingest.elb_threshold = to_double("elb_threshold", kv["elb_threshold"]);
  c.ingest.sample_start = kv["sample_start"];
  c.ingest.sample_end = kv["sample_end"];

  c.p = to_int<int>("p", kv["p"]);
  if (c.p < 1) throw ConfigError("p must be >= 1");
  c.variant = to_variant("variant", kv["variant"]);
  c.V_b = to_double("V_b", kv["V_b"]);
  c.V_beta = to_double("V_beta", kv["V_beta"]);
  c.V_alpha = to_double("V_alpha", kv["V_alpha"]);
  c.alpha0 = to_double("alpha0", kv["alpha0"]);

  c.sampler.n_burn = to_int<int>("n_burn", kv["n_burn"]);
  c.sampler.n_keep = to_int<int>("n_keep", kv["n_keep"]);
  c.sampler.thin = to_int<int>("thin", kv["thin"]);
  c.sampler.seed = to_int<std::uint64_t>("seed", kv["seed"]);
  c.sampler.mh_target_accept = to_double("mh_target_accept", kv["mh_target_accept"]);
  c.sampler.mh_steps = to_int<int>("mh_steps", kv["mh_steps"]);
  c.sampler.validate();
  c.n_chains = to_int<int>("n_chains", kv["n_chains"]);
  if (c.n_chains < 1) throw ConfigError("n_chains must be >= 1");
  c.output_dir = kv["output_dir"];
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");

  std::string list = kv["variants"];
  std::replace(list.begin(), list.end(), ',', ' ');
  std::istringstream vs(list);
  for (std::string name; vs >> name;) c.variants.push_back(to_variant("variants", name));

  const std::string est = kv["estimator"];
  if (est == "CMGD" || est == "cmgd")
    c.estimator = Estimator::CMGD;
  else if (est == "GD" || est == "gd")
    c.estimator = Estimator::GD;
  else
    throw ConfigError("key 'estimator': expected CMGD or GD, got '" + est + "'");

  c.H = to_int<int>("H", kv["H"]);
  if (c.H < 0) throw ConfigError("H must be >= 0");
  c.shock = to_int<int>("shock", kv["shock"]);
  if (c.shock < 0 || c.shock > 6) throw ConfigError("shock must be in 0..6");
  c.analyze_max_draws = to_int<std::size_t>("analyze_max_draws", kv["analyze_max_draws"]);

  c.sim_T = to_int<int>("sim_T", kv["sim_T"]);
  if (c.sim_T < 2) throw ConfigError("sim_T must be >= 2");
  c.sim_phi_diag = to_double("sim_phi_diag", kv["sim_phi_diag"]);
  c.sim_output = kv["sim_output"];
  if (c.sim_output.empty())
    c.sim_output = (std::filesystem::path(c.output_dir) / "simulated.csv").string();
  return c;
}

RunConfig parse_command_line(int argc, const char* const* argv) {
  CLI::App app{"SMUC-IV estimation engine", "smuciv"};
  app.allow_extras();
  std::string command, config_path;
  app.add_option("command", command, "estimate | compare | analyze | simulate")->required();
  app.add_option("--config", config_path, "flat key = value configuration file");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw ConfigError(app.help());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
  static const std::vector<std::string> commands = {"estimate", "compare", "analyze", "simulate"};
  if (std::find(commands.begin(), commands.end(), command) == commands.end())
    throw ConfigError("unknown command '" + command + "'");

  KeyValues overrides;
  const std::vector<std::string> rest = app.remaining();
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const std::string& arg = rest[i];
    if (arg.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + arg + "'");
    std::string key = arg.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else {
      if (i + 1 >= rest.size()) throw ConfigError("option '" + arg + "' needs a value");
      value = rest[++i];
    }
    check_key(key);
    overrides[key] = value;
  }
  const KeyValues file = config_path.empty() ? KeyValues{} : read_config_file(config_path);
  return make_run_config(command, file, overrides);
}

}  // namespace smuciv
