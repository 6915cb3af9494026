#include "smuciv/data_io.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "smuciv/csv.hpp"
#include "smuciv/errors.hpp"

namespace smuciv {

namespace {

// Dates are ISO "YYYY-MM-DD" or "YYYY-MM"; returns year * 12 + (month - 1).
int parse_month(const std::string& date, const std::string& where) {
  int year = 0, month = 0;
  char dash = 0;
  std::istringstream is(date);
  if (!(is >> year >> dash >> month) || dash != '-' || month < 1 || month > 12)
    throw IoError(where + ": unrecognized date '" + date + "'");
  return year * 12 + (month - 1);
}

std::map<int, double> read_series(const SeriesSource& src, const char* what) {
  if (src.path.empty()) throw ConfigError(std::string("no file configured for the ") + what + " series");
  const std::vector<std::string> lines = read_lines(src.path);
  std::map<int, double> out;
  int value_col = -1, date_col = -1;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string& line = lines[ln];
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split_csv_line(line);
    const std::string where = src.path + ":" + std::to_string(ln + 1);
    if (value_col < 0) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == src.column) value_col = static_cast<int>(i);
        if (f[i] == "date" || f[i] == "DATE" || f[i] == "observation_date") date_col = static_cast<int>(i);
      }
      if (value_col < 0) throw IoError(src.path + ": no column named '" + src.column + "'");
      if (date_col < 0) date_col = 0;
      continue;
    }
    if (static_cast<int>(f.size()) <= std::max(value_col, date_col))
      throw IoError(where + ": too few fields");
    const std::string& cell = f[value_col];
    if (cell.empty() || cell == ".") throw IoError(where + ": missing value");
    const int key = parse_month(f[date_col], where);
    if (!out.emplace(key, parse_double(cell, where)).second)
      throw IoError(where + ": duplicate date '" + f[date_col] + "'");
  }
  if (out.empty()) throw IoError(src.path + ": no observations");
  return out;
}

// Quarterly file: the month key collapses to its quarter.
std::map<int, double> to_quarters(const std::map<int, double>& monthly_keys, const std::string& path) {
  std::map<int, double> q;
  for (const auto& [key, v] : monthly_keys)
    if (!q.emplace(key / 3, v).second)
      throw IoError(path + ": two observations in quarter " + quarter_label(key / 3));
  return q;
}

// Monthly series averaged within quarters. Incomplete quarters are dropped at
// the ends of the series and rejected in its interior.
std::map<int, double> quarterly_average(const std::map<int, double>& monthly, const std::string& path) {
  std::map<int, std::pair<double, int>> acc;
  for (const auto& [key, v] : monthly) {
    auto& slot = acc[key / 3];
    slot.first += v;
    slot.second += 1;
  }
  std::map<int, double> q;
  const int first = acc.begin()->first, last = acc.rbegin()->first;
  for (const auto& [qk, s] : acc) {
    if (s.second == 3) {
      q[qk] = s.first / 3.0;
    } else if (qk != first && qk != last) {
      throw IoError(path + ": quarter " + quarter_label(qk) + " has " + std::to_string(s.second) +
                    " monthly observations");
    }
  }
  for (int k = q.begin()->first; k <= q.rbegin()->first; ++k)
    if (!q.count(k)) throw IoError(path + ": no observations in quarter " + quarter_label(k));
  return q;
}

}  // namespace

Eigen::VectorXd Dataset::stacked() const {
  Eigen::VectorXd y(4 * T());
  for (int t = 0; t < T(); ++t) {
    y(4 * t) = g(t);
    y(4 * t + 1) = pi(t);
    y(4 * t + 2) = r(t);
    y(4 * t + 3) = m(t);
  }
  return y;
}

void Dataset::validate() const {
  const int n = T();
  if (n < 1) throw ConfigError("dataset is empty");
  if (pi.size() != n || r.size() != n || m.size() != n || static_cast<int>(dates.size()) != n)
    throw ConfigError("dataset series have different lengths");
  if (!g.allFinite() || !pi.allFinite() || !r.allFinite() || !m.allFinite())
    throw ConfigError("dataset contains non-finite values");
}

bool Dataset::operator==(const Dataset& o) const {
  return dates == o.dates && g.size() == o.g.size() && g == o.g && pi == o.pi && r == o.r &&
         m == o.m && transform_log == o.transform_log;
}

int parse_quarter(const std::string& label) {
  int year = 0, q = 0;
  char sep = 0;
  std::istringstream is(label);
  if (!(is >> year >> sep >> q) || (sep != 'Q' && sep != 'q') || q < 1 || q > 4 || !is.eof())
    throw ConfigError("bad quarter label '" + label + "' (expected e.g. 1987Q4)");
  return 4 * year + (q - 1);
}

std::string quarter_label(int key) {
  const int year = key >= 0 ? key / 4 : (key - 3) / 4;
  return std::to_string(year) + "Q" + std::to_string(key - 4 * year + 1);
}

Dataset ingest(const IngestOptions& opt) {
  const std::map<int, double> gdp = to_quarters(read_series(opt.gdp, "gdp"), opt.gdp.path);
  const std::map<int, double> defl = to_quarters(read_series(opt.deflator, "deflator"), opt.deflator.path);
  std::map<int, double> rate_m = read_series(opt.rate, "rate");
  const std::map<int, double> inst_m = read_series(opt.instrument, "instrument");

  Dataset d;
  int spliced = 0;
  if (opt.use_shadow_rate) {
    const std::map<int, double> shadow = read_series(opt.shadow, "shadow rate");
    for (auto& [key, v] : rate_m) {
      if (v > opt.elb_threshold) continue;
      const auto it = shadow.find(key);
      if (it == shadow.end())
        throw IoError(opt.shadow.path + ": no shadow rate for month " + std::to_string(key / 12) +
                      "-" + std::to_string(key % 12 + 1) + " where the policy rate is at the bound");
      v = it->second;
      ++spliced;
    }
  }
  const std::map<int, double> rate = quarterly_average(rate_m, opt.rate.path);
  const std::map<int, double> inst = quarterly_average(inst_m, opt.instrument.path);

  for (const auto& [k, v] : gdp)
    if (!(v > 0)) throw IoError(opt.gdp.path + ": non-positive level in " + quarter_label(k));
  for (const auto& [k, v] : defl)
    if (!(v > 0)) throw IoError(opt.deflator.path + ": non-positive level in " + quarter_label(k));

  // Inflation needs the previous quarter's deflator.
  int lo = std::max({gdp.begin()->first, defl.begin()->first + 1, rate.begin()->first,
                     inst.begin()->first});
  int hi = std::min({gdp.rbegin()->first, defl.rbegin()->first, rate.rbegin()->first,
                     inst.rbegin()->first});
  if (!opt.sample_start.empty()) {
    const int s = parse_quarter(opt.sample_start);
    if (s < lo) throw IoError("sample_start " + opt.sample_start + " precedes the available data (" +
                              quarter_label(lo) + ")");
    lo = s;
  }
  if (!opt.sample_end.empty()) {
    const int e = parse_quarter(opt.sample_end);
    if (e > hi) throw IoError("sample_end " + opt.sample_end + " is after the available data (" +
                              quarter_label(hi) + ")");
    hi = e;
  }
  if (hi < lo) throw IoError("the input series have no common quarters");

  const int T = hi - lo + 1;
  d.g.resize(T);
  d.pi.resize(T);
  d.r.resize(T);
  d.m.resize(T);
  auto need = [](const std::map<int, double>& s, int k, const std::string& path) {
    const auto it = s.find(k);
    if (it == s.end()) throw IoError(path + ": missing quarter " + quarter_label(k));
    return it->second;
  };
  for (int k = lo; k <= hi; ++k) {
    const int t = k - lo;
    d.dates.push_back(quarter_label(k));
    d.g(t) = 100.0 * std::log(need(gdp, k, opt.gdp.path));
    d.pi(t) = 400.0 * std::log(need(defl, k, opt.deflator.path) / need(defl, k - 1, opt.deflator.path));
    d.r(t) = need(rate, k, opt.rate.path);
    d.m(t) = need(inst, k, opt.instrument.path);
  }
  d.transform_log = {
      "g = 100*log(" + opt.gdp.path + ":" + opt.gdp.column + ")",
      "pi = 400*dlog(" + opt.deflator.path + ":" + opt.deflator.column + ")",
      "r = quarterly mean of monthly " + opt.rate.path + ":" + opt.rate.column,
      "m = quarterly mean of monthly " + opt.instrument.path + ":" + opt.instrument.column,
      "sample " + quarter_label(lo) + " to " + quarter_label(hi)};
  if (opt.use_shadow_rate)
    d.transform_log.push_back("shadow rate " + opt.shadow.path + ":" + opt.shadow.column +
                              " used in " + std::to_string(spliced) +
                              " months with policy rate <= " + format_double(opt.elb_threshold));
  d.validate();
  return d;
}

Dataset read_dataset_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  Dataset d;
  std::vector<double> g, pi, r, m;
  bool header = false;
  int col[5] = {-1, -1, -1, -1, -1};
  const char* names[5] = {"date", "g", "pi", "r", "m"};
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string& line = lines[ln];
    const std::string where = path + ":" + std::to_string(ln + 1);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!header) d.transform_log.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    const std::vector<std::string> f = split_csv_line(line);
    if (!header) {
      for (std::size_t i = 0; i < f.size(); ++i)
        for (int c = 0; c < 5; ++c)
          if (f[i] == names[c]) col[c] = static_cast<int>(i);
      for (int c = 0; c < 5; ++c)
        if (col[c] < 0) throw IoError(path + ": missing column '" + names[c] + "'");
      header = true;
      continue;
    }
    for (int c = 0; c < 5; ++c)
      if (col[c] >= static_cast<int>(f.size())) throw IoError(where + ": too few fields");
    for (int c = 1; c < 5; ++c)
      if (f[col[c]].empty() || f[col[c]] == ".") throw IoError(where + ": missing value");
    d.dates.push_back(f[col[0]]);
    parse_quarter(f[col[0]]);
    g.push_back(parse_double(f[col[1]], where));
    pi.push_back(parse_double(f[col[2]], where));
    r.push_back(parse_double(f[col[3]], where));
    m.push_back(parse_double(f[col[4]], where));
  }
  if (!header) throw IoError(path + ": no header line");
  d.g = Eigen::Map<Eigen::VectorXd>(g.data(), g.size());
  d.pi = Eigen::Map<Eigen::VectorXd>(pi.data(), pi.size());
  d.r = Eigen::Map<Eigen::VectorXd>(r.data(), r.size());
  d.m = Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
  for (std::size_t t = 1; t < d.dates.size(); ++t)
    if (parse_quarter(d.dates[t]) != parse_quarter(d.dates[t - 1]) + 1)
      throw IoError(path + ": quarters are not consecutive at " + d.dates[t]);
  d.validate();
  return d;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  data.validate();
  std::string out;
  for (const std::string& entry : data.transform_log) out += "# " + entry + "\n";
  out += "date,g,pi,r,m\n";
  for (int t = 0; t < data.T(); ++t)
    out += data.dates[t] + "," + format_double(data.g(t)) + "," + format_double(data.pi(t)) + "," +
           format_double(data.r(t)) + "," + format_double(data.m(t)) + "\n";
  write_text(path, out);
}

SimulationResult simulate_dgp(const ModelSpec& spec, const ParameterDraw& truth, int T, Rng& rng,
                              std::optional<Eigen::Vector4d> tau0) {
  if (T < 1) throw ConfigError("T must be >= 1");
  const StructuralMatrices mats = assemble_structural(spec, truth);
  const int L = spec.lag_count();

  Eigen::Vector4d t0;
  if (tau0) {
    t0 = *tau0;
  } else {
    Eigen::LLT<Eigen::Matrix4d> llt(spec.prior.V_tau00);
    if (llt.info() != Eigen::Success) throw ConfigError("V_tau00 is not positive definite");
    Eigen::Vector4d e;
    for (int i = 0; i < 4; ++i) e(i) = standard_normal(rng);
    t0 = spec.prior.tau00_mean + llt.matrixL() * e;
  }

  SimulationResult out;
  out.shocks.resize(7, T);
  out.tau.resize(kTau0 + 3 * T);
  out.tau.head<4>() = t0;
  std::vector<Vector7> eta(T);
  Dataset& d = out.data;
  d.g.resize(T);
  d.pi.resize(T);
  d.r.resize(T);
  d.m.resize(T);
  const int start = parse_quarter("2000Q1");
  for (int t = 0; t < T; ++t) {
    Vector7 eps;
    for (int i = 0; i < 7; ++i) eps(i) = standard_normal(rng);
    out.shocks.col(t) = eps;
    Vector7 e = mats.B_tilde * eps;
    if (t < 2) e.noalias() += xi_block(t + 1) * t0;
    for (int i = 1; i <= L && t - i >= 0; ++i) e.noalias() += mats.A_tilde[i - 1] * eta[t - i];
    eta[t] = e;
    out.tau.segment<3>(kTau0 + 3 * t) = e.head<3>();
    d.g(t) = e(0) + e(3);
    d.pi(t) = e(1) + e(4);
    d.r(t) = e(1) + e(2) + e(5);
    d.m(t) = e(6);
    d.dates.push_back(quarter_label(start + t));
  }
  d.transform_log = {"simulated: p = " + std::to_string(spec.p) + ", variant " +
                     to_string(spec.variant) + ", T = " + std::to_string(T)};
  return out;
}

}  // namespace smuciv
