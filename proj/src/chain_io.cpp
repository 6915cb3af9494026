#include "smuciv/chain_io.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "smuciv/csv.hpp"
#include "smuciv/errors.hpp"

namespace smuciv {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, int rows, int cols, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw IoError(std::string("sidecar field '") + name + "' has the wrong shape");
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      throw IoError(std::string("sidecar field '") + name + "' has the wrong shape");
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json prior_json(const PriorConfig& p) {
  return {{"V_b", p.V_b},
          {"b_mean", matrix_json(p.b_mean)},
          {"V_beta", p.V_beta},
          {"beta0", p.beta0},
          {"V_alpha", p.V_alpha},
          {"alpha0", p.alpha0},
          {"tau00_mean", matrix_json(p.tau00_mean)},
          {"V_tau00", matrix_json(p.V_tau00)},
          {"sigma_sq", matrix_json(p.sigma_sq)}};
}

PriorConfig prior_from_json(const json& j) {
  PriorConfig p;
  p.V_b = j.at("V_b").get<double>();
  p.b_mean = matrix_from_json(j.at("b_mean"), 6, 6, "b_mean");
  p.V_beta = j.at("V_beta").get<double>();
  p.beta0 = j.at("beta0").get<double>();
  p.V_alpha = j.at("V_alpha").get<double>();
  p.alpha0 = j.at("alpha0").get<double>();
  p.tau00_mean = matrix_from_json(j.at("tau00_mean"), 4, 1, "tau00_mean");
  p.V_tau00 = matrix_from_json(j.at("V_tau00"), 4, 4, "V_tau00");
  p.sigma_sq = matrix_from_json(j.at("sigma_sq"), 3, 1, "sigma_sq");
  return p;
}

const char* kTrendName[3] = {"g", "pi", "r"};

}  // namespace

std::vector<std::string> chain_columns(int p, int T) {
  std::vector<std::string> cols;
  for (int l = 1; l <= p; ++l)
    for (int i = 1; i <= 3; ++i)
      for (int j = 1; j <= 3; ++j)
        cols.push_back("Phi_" + std::to_string(l) + "_" + std::to_string(i) + "_" + std::to_string(j));
  for (int i = 1; i <= 6; ++i)
    for (int j = 1; j <= 6; ++j) cols.push_back("B_" + std::to_string(i) + "_" + std::to_string(j));
  for (const char* name : {"beta", "alpha", "kappa1", "kappa2", "tau_g_-1", "tau_g_0", "tau_pi_0",
                           "tau_r_0"})
    cols.emplace_back(name);
  for (int t = 1; t <= T; ++t)
    for (int k = 0; k < 3; ++k) cols.push_back(std::string("tau_") + kTrendName[k] + "_" + std::to_string(t));
  cols.emplace_back("spectral_radius");
  return cols;
}

std::string sidecar_path(const std::string& csv_path) {
  return std::filesystem::path(csv_path).replace_extension(".json").string();
}

void save_chain(const PosteriorChain& chain, const std::string& csv_path) {
  const int p = chain.spec.p, T = chain.T;
  const std::vector<std::string> cols = chain_columns(p, T);
  std::string out;
  for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c];
  out += "\n";
  for (std::size_t d = 0; d < chain.draws.size(); ++d) {
    const ParameterDraw& dr = chain.draws[d];
    if (static_cast<int>(dr.Phi.size()) != p || dr.tau.size() != kTau0 + 3 * T)
      throw ConfigError("draw " + std::to_string(d) + " does not match the chain dimensions");
    std::string line;
    auto put = [&line](double v) {
      if (!line.empty()) line += ',';
      line += format_double(v);
    };
    for (int l = 0; l < p; ++l)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) put(dr.Phi[l](i, j));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) put(dr.B(i, j));
    put(dr.beta);
    put(dr.alpha);
    put(dr.kappa1);
    put(dr.kappa2);
    for (Eigen::Index k = 0; k < dr.tau.size(); ++k) put(dr.tau(k));
    put(d < chain.spectral_radius.size() ? chain.spectral_radius[d] : cycle_spectral_radius(dr.Phi));
    out += line + "\n";
  }
  write_text(csv_path, out);

  const SamplerConfig& c = chain.config;
  const json meta = {
      {"format", "smuciv-chain-1"},
      {"p", p},
      {"T", T},
      {"variant", to_string(chain.spec.variant)},
      {"prior", prior_json(chain.spec.prior)},
      {"sampler",
       {{"n_burn", c.n_burn},
        {"n_keep", c.n_keep},
        {"thin", c.thin},
        {"seed", c.seed},
        {"chain_index", c.chain_index},
        {"mh_target_accept", c.mh_target_accept},
        {"adapt_until", c.adaptation_end()},
        {"mh_steps", c.mh_steps}}},
      {"n_draws", chain.draws.size()},
      {"accept_rate_B", chain.accept_rate_B},
      {"impact_singular_rejections", chain.impact_singular_rejections}};
  write_text(sidecar_path(csv_path), meta.dump(2) + "\n");
}

PosteriorChain load_chain(const std::string& csv_path) {
  const std::string meta_path = sidecar_path(csv_path);
  std::ifstream in(meta_path);
  if (!in) throw IoError("cannot open '" + meta_path + "'");
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw IoError(meta_path + ": " + e.what());
  }

  PosteriorChain chain;
  try {
    chain.spec.p = meta.at("p").get<int>();
    chain.T = meta.at("T").get<int>();
    chain.spec.variant = parse_variant(meta.at("variant").get<std::string>());
    chain.spec.prior = prior_from_json(meta.at("prior"));
    const json& s = meta.at("sampler");
    chain.config.n_burn = s.at("n_burn").get<int>();
    chain.config.n_keep = s.at("n_keep").get<int>();
    chain.config.thin = s.at("thin").get<int>();
    chain.config.seed = s.at("seed").get<std::uint64_t>();
    chain.config.chain_index = s.at("chain_index").get<int>();
    chain.config.mh_target_accept = s.at("mh_target_accept").get<double>();
    chain.config.adapt_until = s.at("adapt_until").get<int>();
    chain.config.mh_steps = s.at("mh_steps").get<int>();
    chain.accept_rate_B = meta.at("accept_rate_B").get<double>();
    chain.impact_singular_rejections = meta.at("impact_singular_rejections").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw IoError(meta_path + ": " + e.what());
  }
  chain.spec.validate();

  const int p = chain.spec.p, T = chain.T;
  const std::vector<std::string> cols = chain_columns(p, T);
  const std::vector<std::string> lines = read_lines(csv_path);
  if (lines.empty() || split_csv_line(lines[0]) != cols)
    throw IoError(csv_path + ": header does not match p = " + std::to_string(p) +
                  ", T = " + std::to_string(T));
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const std::string where = csv_path + ":" + std::to_string(ln + 1);
    const std::vector<std::string> f = split_csv_line(lines[ln]);
    if (f.size() != cols.size()) throw IoError(where + ": expected " + std::to_string(cols.size()) + " fields");
    std::size_t k = 0;
    auto next = [&]() { return parse_double(f[k++], where); };
    ParameterDraw d;
    d.Phi.assign(p, Matrix3::Zero());
    for (int l = 0; l < p; ++l)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) d.Phi[l](i, j) = next();
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) d.B(i, j) = next();
    d.beta = next();
    d.alpha = next();
    d.kappa1 = next();
    d.kappa2 = next();
    d.tau.resize(kTau0 + 3 * T);
    for (Eigen::Index i = 0; i < d.tau.size(); ++i) d.tau(i) = next();
    chain.spectral_radius.push_back(next());
    chain.draws.push_back(std::move(d));
  }
  return chain;
}

}  // namespace smuciv
