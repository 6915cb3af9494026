#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>

#include "smuciv/chain_io.hpp"
#include "smuciv/csv.hpp"
#include "smuciv/data_io.hpp"
#include "smuciv/errors.hpp"
#include "test_support.hpp"

using namespace smuciv;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("smuciv_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Monthly file with one value per month from y0-01 to y1-12.
void write_monthly(const fs::path& path, int y0, int y1, const std::function<double(int, int)>& f) {
  std::string s = "date,value\n";
  for (int y = y0; y <= y1; ++y)
    for (int m = 1; m <= 12; ++m) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02d-01", y, m);
      s += std::string(buf) + "," + format_double(f(y, m)) + "\n";
    }
  write_text(path.string(), s);
}

void write_quarterly(const fs::path& path, int y0, int y1, const std::function<double(int, int)>& f,
                     const std::string& header = "DATE,value") {
  std::string s = header + "\n";
  for (int y = y0; y <= y1; ++y)
    for (int q = 1; q <= 4; ++q) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02d-01", y, 3 * q - 2);
      s += std::string(buf) + "," + format_double(f(y, q)) + "\n";
    }
  write_text(path.string(), s);
}

}  // namespace

TEST_CASE("format and parse doubles") {
  for (double x : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0,
                   std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max()}) {
    CAPTURE(x);
    const double back = parse_double(format_double(x), "test");
    CHECK(std::memcmp(&back, &x, sizeof x) == 0);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK_THROWS_AS(parse_double("1.5x", "here"), IoError);
  CHECK_THROWS_AS(parse_double("", "here"), IoError);
  try {
    parse_double("abc", "file.csv:3");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("file.csv:3") != std::string::npos);
  }
}

TEST_CASE("split CSV lines") {
  const auto f = split_csv_line(" a , b,,c \r");
  REQUIRE(f.size() == 4);
  CHECK(f[0] == "a");
  CHECK(f[1] == "b");
  CHECK(f[2].empty());
  CHECK(f[3] == "c");
  CHECK(split_csv_line("x").size() == 1);
  CHECK_THROWS_AS(read_lines("/nonexistent/dir/file.csv"), IoError);
}

TEST_CASE("quarter labels") {
  CHECK(parse_quarter("1987Q4") == 4 * 1987 + 3);
  CHECK(quarter_label(4 * 1987 + 3) == "1987Q4");
  CHECK(quarter_label(parse_quarter("2000Q1") + 5) == "2001Q2");
  CHECK(parse_quarter("2023q2") == 4 * 2023 + 1);
  for (const char* bad : {"1987Q5", "1987Q0", "1987-4", "1987Q4x", "Q4"})
    CHECK_THROWS_AS(parse_quarter(bad), ConfigError);
  for (int k = 4 * 1950; k < 4 * 2030; k += 7) CHECK(parse_quarter(quarter_label(k)) == k);
}

TEST_CASE("ingest applies the transformations") {
  const fs::path d = scratch_dir("ingest");
  // GDP level 100 in every quarter; deflator grows 1% per quarter.
  write_quarterly(d / "gdp.csv", 1999, 2001, [](int, int) { return 100.0; });
  write_quarterly(d / "defl.csv", 1999, 2001,
                  [](int y, int q) { return std::pow(1.01, 4 * (y - 1999) + q - 1); });
  // Monthly rate: 4, 5.25, 6.5 within each quarter -> mean 5.25.
  write_monthly(d / "rate.csv", 1999, 2001, [](int, int m) { return 4.0 + 1.25 * ((m - 1) % 3); });
  write_monthly(d / "mp.csv", 1999, 2001, [](int y, int m) { return 0.01 * (12 * (y - 1999) + m); });

  IngestOptions o;
  o.gdp = {(d / "gdp.csv").string(), "value"};
  o.deflator = {(d / "defl.csv").string(), "value"};
  o.rate = {(d / "rate.csv").string(), "value"};
  o.instrument = {(d / "mp.csv").string(), "value"};
  const Dataset data = ingest(o);
  // The first deflator quarter is lost to differencing.
  REQUIRE(data.T() == 11);
  CHECK(data.dates.front() == "1999Q2");
  CHECK(data.dates.back() == "2001Q4");
  for (int t = 0; t < data.T(); ++t) {
    CHECK(data.g(t) == doctest::Approx(460.517018598809).epsilon(1e-13));
    CHECK(data.pi(t) == doctest::Approx(3.980132341267237).epsilon(1e-12));
    CHECK(data.r(t) == doctest::Approx(5.25).epsilon(1e-14));
  }
  // 1999Q2 holds months 4..6.
  CHECK(data.m(0) == doctest::Approx(0.05).epsilon(1e-13));
  CHECK(data.transform_log.size() == 5);

  o.sample_start = "2000Q1";
  o.sample_end = "2000Q4";
  const Dataset trimmed = ingest(o);
  CHECK(trimmed.T() == 4);
  CHECK(trimmed.dates.front() == "2000Q1");
  o.sample_start = "1998Q1";
  CHECK_THROWS_AS(ingest(o), IoError);
  o.sample_start.clear();
  o.sample_end.clear();

  o.gdp.column = "nope";
  CHECK_THROWS_AS(ingest(o), IoError);
  o.gdp.column = "value";
  o.rate.path = (d / "missing.csv").string();
  try {
    ingest(o);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
  }
}

TEST_CASE("ingest splices the shadow rate at the bound") {
  const fs::path d = scratch_dir("shadow");
  write_quarterly(d / "gdp.csv", 2009, 2010, [](int, int) { return 50.0; });
  write_quarterly(d / "defl.csv", 2009, 2010, [](int, int) { return 1.0; });
  // At the bound during 2010.
  write_monthly(d / "rate.csv", 2009, 2010, [](int y, int) { return y == 2010 ? 0.1 : 2.0; });
  write_monthly(d / "shadow.csv", 2009, 2010, [](int, int m) { return -1.0 - m; });
  write_monthly(d / "mp.csv", 2009, 2010, [](int, int) { return 0.0; });
  IngestOptions o;
  o.gdp.path = (d / "gdp.csv").string();
  o.deflator.path = (d / "defl.csv").string();
  o.rate.path = (d / "rate.csv").string();
  o.instrument.path = (d / "mp.csv").string();
  o.shadow.path = (d / "shadow.csv").string();
  const Dataset plain = ingest(o);
  CHECK(plain.r(plain.T() - 1) == doctest::Approx(0.1));
  o.use_shadow_rate = true;
  const Dataset spliced = ingest(o);
  CHECK(spliced.r(0) == doctest::Approx(2.0));
  // 2010Q4 averages months 10..12 of the shadow series.
  CHECK(spliced.r(spliced.T() - 1) == doctest::Approx(-12.0));
  CHECK(spliced.transform_log.back().find("12 months") != std::string::npos);
}

TEST_CASE("ingest rejects gaps") {
  const fs::path d = scratch_dir("gaps");
  write_quarterly(d / "gdp.csv", 2000, 2001, [](int, int) { return 50.0; });
  write_quarterly(d / "defl.csv", 2000, 2001, [](int, int) { return 1.0; });
  write_text((d / "rate.csv").string(),
             "date,value\n2000-01-01,1\n2000-02-01,1\n2000-03-01,1\n2000-04-01,1\n"
             "2000-07-01,1\n2000-08-01,1\n2000-09-01,1\n");
  write_monthly(d / "mp.csv", 2000, 2001, [](int, int) { return 0.0; });
  IngestOptions o;
  o.gdp.path = (d / "gdp.csv").string();
  o.deflator.path = (d / "defl.csv").string();
  o.rate.path = (d / "rate.csv").string();
  o.instrument.path = (d / "mp.csv").string();
  CHECK_THROWS_AS(ingest(o), IoError);
  write_text((d / "rate.csv").string(), "date,value\n2000-01-01,.\n");
  CHECK_THROWS_AS(ingest(o), IoError);
}

TEST_CASE("prepared dataset round trip is exact") {
  const fs::path d = scratch_dir("dataset");
  ModelSpec spec;
  spec.p = 2;
  ParameterDraw truth = initial_draw(spec);
  truth.Phi = {0.5 * Matrix3::Identity(), Matrix3::Zero()};
  truth.beta = 0.5;
  Rng rng(51, 0);
  const Dataset data = simulate_dgp(spec, truth, 40, rng).data;
  const std::string path = (d / "data.csv").string();
  write_dataset_csv(path, data);
  const Dataset back = read_dataset_csv(path);
  CHECK(back == data);
  write_dataset_csv((d / "again.csv").string(), back);
  CHECK(read_lines(path) == read_lines((d / "again.csv").string()));

  write_text(path, "date,g,pi,r,m\n2000Q1,1,2,3,4\n2000Q3,1,2,3,4\n");
  CHECK_THROWS_AS(read_dataset_csv(path), IoError);
  write_text(path, "date,g,pi,r\n2000Q1,1,2,3\n");
  CHECK_THROWS_AS(read_dataset_csv(path), IoError);
  write_text(path, "date,g,pi,r,m\n2000Q1,1,2,oops,4\n");
  CHECK_THROWS_AS(read_dataset_csv(path), IoError);
}

TEST_CASE("simulated data follow the measurement identities") {
  ModelSpec spec;
  spec.p = 1;
  ParameterDraw truth = initial_draw(spec);
  truth.Phi = {0.4 * Matrix3::Identity()};
  Rng rng(52, 0);
  const SimulationResult sim = simulate_dgp(spec, truth, 30, rng);
  CHECK(sim.data.dates.front() == "2000Q1");
  CHECK(sim.tau.size() == 4 + 3 * 30);
  CHECK(sim.shocks.rows() == 7);
  // Zero shocks: trends follow their deterministic recursion.
  Rng a(53, 0), b(53, 0);
  const SimulationResult s1 = simulate_dgp(spec, truth, 5, a);
  const SimulationResult s2 = simulate_dgp(spec, truth, 5, b);
  CHECK(s1.data == s2.data);
  CHECK_THROWS_AS(simulate_dgp(spec, truth, 0, a), ConfigError);
}

TEST_CASE("chain save and load round trip") {
  const fs::path d = scratch_dir("chain");
  Rng rng(54, 0);
  for (int p = 1; p <= 3; ++p) {
    const auto in = testing::random_instance(p, 5, rng, p == 2 ? Variant::R3 : Variant::Baseline);
    PosteriorChain c;
    c.spec = in.spec;
    c.T = 5;
    c.config.seed = 99;
    c.config.n_keep = 3;
    c.accept_rate_B = 0.27;
    c.impact_singular_rejections = 4;
    for (int k = 0; k < 3; ++k) {
      ParameterDraw dr = in.draw;
      dr.tau = testing::random_matrix(4 + 15, 1, 3.0, rng);
      dr.kappa1 = 1.0 / (3.0 + k);
      c.draws.push_back(dr);
      c.spectral_radius.push_back(cycle_spectral_radius(dr.Phi));
    }
    const std::string path = (d / ("chain" + std::to_string(p) + ".csv")).string();
    save_chain(c, path);
    CHECK(fs::exists(sidecar_path(path)));
    const PosteriorChain back = load_chain(path);
    CAPTURE(p);
    REQUIRE(back.draws.size() == 3);
    CHECK(back.T == 5);
    CHECK(back.spec.p == p);
    CHECK(back.spec.variant == c.spec.variant);
    CHECK(back.spec.prior.V_tau00 == c.spec.prior.V_tau00);
    CHECK(back.config.seed == 99);
    CHECK(back.accept_rate_B == 0.27);
    CHECK(back.impact_singular_rejections == 4);
    for (int k = 0; k < 3; ++k) {
      CHECK(back.draws[k].B == c.draws[k].B);
      CHECK(back.draws[k].tau == c.draws[k].tau);
      CHECK(back.draws[k].kappa1 == c.draws[k].kappa1);
      CHECK(back.draws[k].beta == c.draws[k].beta);
      CHECK(back.draws[k].alpha == c.draws[k].alpha);
      for (int l = 0; l < p; ++l) CHECK(back.draws[k].Phi[l] == c.draws[k].Phi[l]);
      CHECK(back.spectral_radius[k] == c.spectral_radius[k]);
    }
    CHECK(split_csv_line(read_lines(path).front()) == chain_columns(p, 5));
    const std::string path2 = path + ".again.csv";
    save_chain(back, path2);
    CHECK(read_lines(path) == read_lines(path2));
    CHECK(read_lines(sidecar_path(path)) == read_lines(sidecar_path(path2)));
  }
  CHECK_THROWS_AS(load_chain((d / "absent.csv").string()), IoError);
}
