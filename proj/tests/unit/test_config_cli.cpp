#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gcmopt/cli.hpp"
#include "gcmopt/config.hpp"
#include "gcmopt/error.hpp"
#include "gcmopt/io.hpp"

using namespace gcmopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "gcmopt_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json small_base() {
  return {{"grid", {{"d1", 500}, {"d2", 500}, {"k1", 10}, {"k2", 10}, {"k1p", 10}, {"k2p", 10}}},
          {"environment", {{"block_count", 30}}},
          {"timing", {{"trial", 40}}},
          {"abs_count", 2},
          {"gu_count", 10},
          {"solver", {{"ea_rounds", 100}}}};
}

void write_json(const fs::path& p, const json& doc) { write_text_file(p, doc.dump(2)); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_main(std::vector<std::string> args) {
  args.insert(args.begin(), "gcmopt");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST(Config, DefaultsRoundTripThroughJson) {
  const TrialConfig cfg;
  EXPECT_EQ(trial_config_from_json(trial_config_to_json(cfg)), cfg);
  TrialConfig other;
  other.solver.step_size = 0.25;
  other.solver.mutation_radius = 100.0;
  other.solver.kind = SolverKind::kKmeansEa;
  other.channel.tx_power_dbm = 10.0;
  other.grid.k1 = other.grid.k1p = 20;
  EXPECT_EQ(trial_config_from_json(json::parse(trial_config_to_json(other).dump())), other);
}

TEST(Config, MissingKeysKeepDefaultsAndUnknownKeysAreRejected) {
  const json minimal = {{"version", 1}, {"abs_count", 3}};
  const auto cfg = trial_config_from_json(minimal);
  EXPECT_EQ(cfg.abs_count, 3);
  EXPECT_EQ(cfg.gu_count, TrialConfig{}.gu_count);
  const json typo = {{"version", 1}, {"abs_cnt", 3}};
  try {
    trial_config_from_json(typo);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("abs_cnt"), std::string::npos);
  }
  EXPECT_THROW(trial_config_from_json(json{{"version", 1}, {"grid", {{"k3", 1}}}}), Error);
  EXPECT_THROW(trial_config_from_json(json{{"version", 2}}), Error);
  EXPECT_THROW(trial_config_from_json(json{{"version", 1}, {"abs_count", 0}}), Error);
  EXPECT_THROW(trial_config_from_json(json{{"version", 1}, {"abs_count", "two"}}), Error);
}

TEST(Experiment, SweepExpansionAndTrialDerivation) {
  SweepAxes axes;
  axes.grid_length = {50.0, 25.0};
  axes.abs_count = {2, 3, 4};
  const auto points = expand_sweep(axes);
  ASSERT_EQ(points.size(), 6u);
  EXPECT_EQ(points.front().label(), "len50_N2");
  EXPECT_EQ(points.back().label(), "len25_N4");
  EXPECT_EQ(expand_sweep({}).size(), 1u);
  EXPECT_EQ(expand_sweep({}).front().label(), "base");

  ExperimentSpec spec;
  spec.base.grid.d1 = spec.base.grid.d2 = 500.0;
  spec.seeds = {4};
  spec.solvers = {SolverKind::kOnline};
  const auto cfg = trial_for(spec, points[1], 4, SolverKind::kOracle);
  EXPECT_EQ(cfg.grid.k1, 10);
  EXPECT_EQ(cfg.grid.k2p, 10);
  EXPECT_EQ(cfg.abs_count, 3);
  EXPECT_EQ(cfg.mobility_seed, 4u);
  EXPECT_EQ(cfg.solver.kind, SolverKind::kOracle);
  EXPECT_NE(cfg.environment.seed, spec.base.environment.seed);
  spec.environment_seeds = EnvironmentSeedMode::kFixed;
  EXPECT_EQ(trial_for(spec, points[1], 4, SolverKind::kOracle).environment.seed, spec.base.environment.seed);
}

TEST(Experiment, JsonRoundTripAndValidation) {
  json doc = {{"format", "gcmopt-experiment"}, {"version", 1}, {"base", small_base()},
              {"seeds", {1, 2}},               {"solvers", {"online", "oracle"}},
              {"sweep", {{"grid_length", {50, 25}}}}};
  const auto spec = experiment_from_json(doc);
  const auto back = experiment_from_json(experiment_to_json(spec));
  EXPECT_EQ(back.base, spec.base);
  EXPECT_EQ(back.seeds, spec.seeds);
  EXPECT_EQ(back.solvers, spec.solvers);
  EXPECT_EQ(back.sweep.grid_length, spec.sweep.grid_length);
  doc["sweep"]["grid_length"] = {30};
  EXPECT_THROW(experiment_from_json(doc), Error);
  doc.erase("sweep");
  doc["solvers"] = {"td3"};
  EXPECT_THROW(experiment_from_json(doc), Error);
}

TEST(Io, FormatDoubleRoundTripsAndStatsUseSampleDeviation) {
  for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 12345.678, 1e-300, -2.5}) {
    EXPECT_EQ(std::stod(format_double(v)), v) << format_double(v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  const auto s = stats_of({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(s.count, 4);
  EXPECT_EQ(stats_of({7.0}).stddev, 0.0);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("exit_codes");
  EXPECT_EQ(run_main({}), cli::kUsage);
  EXPECT_EQ(run_main({"frobnicate"}), cli::kUsage);
  EXPECT_EQ(run_main({"validate-config", (dir / "missing.json").string()}), cli::kIoError);

  json good = small_base();
  good["version"] = 1;
  write_json(dir / "good.json", good);
  EXPECT_EQ(run_main({"validate-config", (dir / "good.json").string()}), cli::kOk);

  json bad = good;
  bad["mystery"] = 1;
  write_json(dir / "bad.json", bad);
  EXPECT_EQ(run_main({"validate-config", (dir / "bad.json").string()}), cli::kConfigError);

  write_text_file(dir / "garbled.json", "{ not json");
  EXPECT_EQ(run_main({"validate-config", (dir / "garbled.json").string()}), cli::kConfigError);

  EXPECT_EQ(cli::exit_code_for(solver_error("x")), cli::kSolverError);
  EXPECT_EQ(cli::exit_code_for(contract_error("x")), cli::kContractError);
  EXPECT_EQ(cli::exit_code_for(std::out_of_range("x")), cli::kContractError);
  EXPECT_EQ(cli::exit_code_for(io_error("x")), cli::kIoError);
}

TEST(Cli, BuildGcmIsDeterministicAndCachedMapsAreChecked) {
  const auto dir = scratch("build_gcm");
  json cfg_doc = small_base();
  cfg_doc["version"] = 1;
  write_json(dir / "trial.json", cfg_doc);
  std::ostringstream log;
  ASSERT_EQ(cli::cmd_build_gcm(dir / "trial.json", dir / "a.gcm", log), cli::kOk) << log.str();
  ASSERT_EQ(cli::cmd_build_gcm(dir / "trial.json", dir / "b.gcm", log), cli::kOk) << log.str();
  EXPECT_EQ(slurp(dir / "a.gcm"), slurp(dir / "b.gcm"));
  EXPECT_TRUE(fs::exists(sidecar_path(dir / "a.gcm")));

  TrialConfig cfg = trial_config_from_json(cfg_doc);
  cfg.gcm_file = (dir / "a.gcm").string();
  const Environment env = make_environment(cfg);
  EXPECT_EQ(load_cached_gcm(cfg, env), build_gcm(env, cfg.channel, cfg.grid));

  // Another channel or environment must not reuse the cached map.
  TrialConfig other = cfg;
  other.channel.tx_power_dbm += 1.0;
  EXPECT_THROW(load_cached_gcm(other, env), Error);
  other = cfg;
  other.environment.seed += 1;
  EXPECT_THROW(load_cached_gcm(other, make_environment(other)), Error);
  fs::remove(sidecar_path(dir / "a.gcm"));
  EXPECT_THROW(load_cached_gcm(cfg, env), Error);
}

TEST(Cli, RunWritesPerTrialOutputsAndSummaries) {
  const auto dir = scratch("run");
  json doc = {{"format", "gcmopt-experiment"},
              {"version", 1},
              {"base", small_base()},
              {"seeds", {1, 2, 3}},
              {"solvers", {"online", "kmeans-ea"}},
              {"sweep", {{"grid_length", {100, 50}}}},
              {"output_dir", "out"}};
  write_json(dir / "exp.json", doc);
  ::setenv("GCMOPT_OUTPUT_ROOT", dir.c_str(), 1);
  std::ostringstream log;
  const int code = cli::cmd_run(dir / "exp.json", log);
  ::unsetenv("GCMOPT_OUTPUT_ROOT");
  ASSERT_EQ(code, cli::kOk) << log.str();

  const fs::path root = dir / "out";
  const json manifest = read_json_file(root / "manifest.json");
  ASSERT_EQ(manifest.at("trials").size(), 12u);
  for (const auto& t : manifest.at("trials")) {
    EXPECT_TRUE(t.at("ok").get<bool>());
    const fs::path trial = root / t.at("dir").get<std::string>();
    for (const char* f : {"metrics.csv", "periods.csv", "timing.csv", "summary.json", "config.json", "trajectory.json"}) {
      EXPECT_TRUE(fs::exists(trial / f)) << trial / f;
    }
  }

  const auto rows = read_csv(root / "summary.csv");
  ASSERT_EQ(rows.size(), 5u);
  const auto& header = rows[0];
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::string solver = rows[r][col("solver")];
    const std::string point = rows[r][col("point")];
    std::vector<double> acr;
    for (int seed : {1, 2, 3}) {
      const auto summary =
          read_json_file(root / point / solver / ("seed_" + std::to_string(seed)) / "summary.json");
      acr.push_back(summary.at("acr_simplified").get<double>());
    }
    const double mean = (acr[0] + acr[1] + acr[2]) / 3.0;
    double var = 0.0;
    for (double a : acr) var += (a - mean) * (a - mean);
    EXPECT_NEAR(std::stod(rows[r][col("acr_mean")]), mean, 1e-12);
    EXPECT_NEAR(std::stod(rows[r][col("acr_std")]), std::sqrt(var / 2.0), 1e-12);
    EXPECT_EQ(rows[r][col("trials")], "3");
  }
  EXPECT_EQ(read_csv(root / "grid_sensitivity.csv").size(), 5u);

  std::ostringstream plot_log;
  ASSERT_EQ(cli::cmd_plot_data(root, plot_log), cli::kOk) << plot_log.str();
  for (const char* f : {"stepwise_cr.csv", "acr_by_point.csv", "acr_by_blocks.csv", "trajectories.csv", "blocks.csv"}) {
    EXPECT_TRUE(fs::exists(root / "plot" / f)) << f;
  }
  const auto stepwise = read_csv(root / "plot" / "stepwise_cr.csv");
  EXPECT_EQ(stepwise.size(), 1u + 4u * 40u);
}

TEST(Cli, PlotDataRejectsEmptyDirectory) {
  const auto dir = scratch("empty");
  std::ostringstream log;
  EXPECT_EQ(cli::cmd_plot_data(dir, log), cli::kIoError);
}
