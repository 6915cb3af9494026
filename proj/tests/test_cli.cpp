#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "smuciv/chain_io.hpp"
#include "smuciv/commands.hpp"
#include "smuciv/csv.hpp"
#include "smuciv/errors.hpp"

using namespace smuciv;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "smuciv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("smuciv_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Simulated data set shared by the command tests.
std::string simulated(const fs::path& dir, int T) {
  const std::string path = (dir / "sim.csv").string();
  const Run r = run({"simulate", "--p", "1", "--sim_T", std::to_string(T), "--seed", "5",
                     "--sim_output", path});
  REQUIRE(r.code == 0);
  return path;
}

}  // namespace

TEST_CASE("configuration parsing") {
  const RunConfig d = make_run_config("estimate", {}, {});
  CHECK(d.p == 4);
  CHECK(d.sampler.n_keep == 20000);
  CHECK(d.variants.size() == 5);
  CHECK(d.estimator == Estimator::CMGD);
  CHECK(d.sim_output == (fs::path("out") / "simulated.csv").string());

  const fs::path dir = scratch_dir("config");
  const std::string cfg = (dir / "run.cfg").string();
  write_text(cfg, "# comment\np = 2   # lags\n\nvariant = R3\nn_keep=10\nestimator = GD\n");
  const KeyValues file = read_config_file(cfg);
  CHECK(file.at("p") == "2");
  const RunConfig c = make_run_config("estimate", file, {{"p", "3"}});
  CHECK(c.p == 3);  // overrides win
  CHECK(c.variant == Variant::R3);
  CHECK(c.sampler.n_keep == 10);
  CHECK(c.estimator == Estimator::GD);

  CHECK_THROWS_AS(make_run_config("estimate", {{"lags", "2"}}, {}), ConfigError);
  CHECK_THROWS_AS(make_run_config("estimate", {{"p", "two"}}, {}), ConfigError);
  CHECK_THROWS_AS(make_run_config("estimate", {{"p", "0"}}, {}), ConfigError);
  CHECK_THROWS_AS(make_run_config("estimate", {{"estimator", "IS"}}, {}), ConfigError);
  CHECK_THROWS_AS(make_run_config("estimate", {{"shock", "7"}}, {}), ConfigError);
  write_text(cfg, "p 2\n");
  CHECK_THROWS_AS(read_config_file(cfg), ConfigError);
  CHECK_THROWS_AS(read_config_file((dir / "none.cfg").string()), IoError);

  const char* argv[] = {"smuciv", "analyze", "--H=8", "--shock", "3"};
  const RunConfig a = parse_command_line(5, argv);
  CHECK(a.command == "analyze");
  CHECK(a.H == 8);
  CHECK(a.shock == 3);
}

TEST_CASE("exit codes") {
  Run r = run({"frobnicate"});
  CHECK(r.code == 2);
  r = run({"estimate", "--bogus", "1"});
  CHECK(r.code == 2);
  CHECK(r.err.find("bogus") != std::string::npos);
  r = run({"estimate", "--p"});
  CHECK(r.code == 2);
  r = run({"estimate"});
  CHECK(r.code == 2);
  CHECK(r.err.find("no data") != std::string::npos);
  r = run({"estimate", "--data", "/no/such/file.csv"});
  CHECK(r.code == 2);
  CHECK(r.err.find("/no/such/file.csv") != std::string::npos);
}

TEST_CASE("simulate, estimate and analyze") {
  const fs::path dir = scratch_dir("pipeline");
  const std::string data = simulated(dir, 60);
  CHECK(read_dataset_csv(data).T() == 60);
  const std::string out = (dir / "out").string();
  const std::vector<std::string> common = {"--data", data, "--p", "1", "--n_burn", "300",
                                           "--n_keep", "500", "--output_dir", out};
  std::vector<std::string> args = {"estimate"};
  args.insert(args.end(), common.begin(), common.end());
  Run r = run(args);
  INFO(r.err);
  REQUIRE(r.code == 0);
  const PosteriorChain chain = load_chain((fs::path(out) / "chain_0.csv").string());
  CHECK(chain.draws.size() == 500);
  CHECK(chain.T == 60);
  CHECK(fs::exists(fs::path(out) / "trends.csv"));

  args[0] = "analyze";
  args.insert(args.end(), {"--H", "6", "--analyze_max_draws", "100"});
  r = run(args);
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("100 draws") != std::string::npos);
  const std::vector<std::string> irf = read_lines((fs::path(out) / "irf.csv").string());
  CHECK(irf.size() == 1 + 10 * 7);
  const std::vector<std::string> hd = read_lines((fs::path(out) / "hd.csv").string());
  CHECK(hd.size() == 1 + 11 * 60);
  // additivity_error is the last column.
  for (std::size_t i = 1; i < hd.size(); ++i) {
    const auto f = split_csv_line(hd[i]);
    CHECK(parse_double(f.back(), "hd") <= 1e-10);
  }

  // Analyze against data of a different length.
  const std::string other = simulated(scratch_dir("pipeline_other"), 30);
  args[2] = other;
  r = run(args);
  CHECK(r.code == 2);
}

TEST_CASE("outputs are byte-identical across runs") {
  const fs::path dir = scratch_dir("determinism");
  const std::string data = simulated(dir, 40);
  for (const char* sub : {"a", "b"}) {
    const Run r = run({"estimate", "--data", data, "--p", "2", "--n_burn", "100", "--n_keep", "200",
                       "--n_chains", "2", "--seed", "11", "--output_dir", (dir / sub).string()});
    REQUIRE(r.code == 0);
  }
  for (const char* f : {"chain_0.csv", "chain_0.json", "chain_1.csv", "chain_1.json", "trends.csv"}) {
    CAPTURE(f);
    const std::string a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
    CHECK(!a.empty());
    CHECK(a == b);
  }
  // Chains use different streams.
  CHECK(slurp(dir / "a" / "chain_0.csv") != slurp(dir / "a" / "chain_1.csv"));
}

TEST_CASE("compare writes a ranked table") {
  const fs::path dir = scratch_dir("compare");
  const std::string data = simulated(dir, 40);
  const std::string out = (dir / "out").string();
  const Run r = run({"compare", "--data", data, "--p", "1", "--n_burn", "300", "--n_keep", "2000",
                     "--variants", "R4,Baseline", "--output_dir", out});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const std::vector<std::string> lines = read_lines((fs::path(out) / "compare.csv").string());
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "variant,log_ml,mc_se,rank");
  CHECK(fs::exists(fs::path(out) / "chain_R4.csv"));
  CHECK(fs::exists(fs::path(out) / "chain_baseline.csv"));
}
