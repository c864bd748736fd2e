#include "gcmopt/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

#include "gcmopt/config.hpp"
#include "gcmopt/error.hpp"
#include "gcmopt/io.hpp"
#include "gcmopt/sim.hpp"

namespace gcmopt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

TrialConfig load_trial_config(const fs::path& path) {
  const json doc = read_json_file(path);
  if (!doc.is_object() || !doc.contains("version")) throw config_error(path.string() + ": missing 'version'");
  return trial_config_from_json(doc);
}

std::string trial_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

double number_field(const std::string& text, const fs::path& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw io_error("malformed number '" + text + "' in " + where.string());
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::kConfig:
        return kConfigError;
      case ErrorKind::kIo:
        return kIoError;
      case ErrorKind::kSolver:
        return kSolverError;
      case ErrorKind::kContract:
        return kContractError;
    }
  }
  if (dynamic_cast<const std::out_of_range*>(&e) != nullptr) return kContractError;
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return kIoError;
  if (dynamic_cast<const json::exception*>(&e) != nullptr) return kConfigError;
  return kContractError;
}

fs::path resolve_output(const fs::path& path) {
  if (path.is_absolute()) return path;
  if (const char* root = std::getenv("GCMOPT_OUTPUT_ROOT"); root != nullptr && *root != '\0') return fs::path(root) / path;
  return path;
}

int cmd_validate_config(const fs::path& config, std::ostream& log) {
  return guarded(log, [&] {
    const json doc = read_json_file(config);
    if (doc.is_object() && doc.value("format", "") == "gcmopt-experiment") {
      const ExperimentSpec spec = experiment_from_json(doc);
      std::size_t trials = expand_sweep(spec.sweep).size() * spec.seeds.size() * spec.solvers.size();
      log << "ok: experiment with " << trials << " trials\n";
    } else {
      load_trial_config(config);
      log << "ok: trial config\n";
    }
    return static_cast<int>(kOk);
  });
}

int cmd_build_gcm(const fs::path& config, const fs::path& out, std::ostream& log) {
  return guarded(log, [&] {
    const TrialConfig cfg = load_trial_config(config);
    const Environment env = make_environment(cfg);
    const Gcm gcm = build_gcm(env, cfg.channel, cfg.grid);
    const fs::path target = resolve_output(out);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    save_gcm(gcm, target);
    write_text_file(sidecar_path(target), gcm_sidecar(target, env, cfg).dump(2) + "\n");
    log << "wrote " << target.string() << " (" << gcm.count_ones() << " connected pairs)\n";
    return static_cast<int>(kOk);
  });
}

int cmd_run(const fs::path& experiment, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentSpec spec = experiment_from_json(read_json_file(experiment));
    const fs::path root = resolve_output(spec.output_dir);
    fs::create_directories(root);

    struct Outcome {
      std::string point;
      SolverKind solver;
      std::uint64_t seed;
      TrialConfig cfg;
      std::optional<TrialLog> log;
      std::string error;
      int code = kOk;
    };
    std::vector<Outcome> outcomes;
    const auto points = expand_sweep(spec.sweep);
    for (const auto& point : points) {
      for (std::uint64_t seed : spec.seeds) {
        // Environment and map depend only on the point and seed, so solvers share them.
        std::optional<Environment> env;
        std::optional<Gcm> gcm;
        for (SolverKind solver : spec.solvers) {
          Outcome o{point.label(), solver, seed, trial_for(spec, point, seed, solver), std::nullopt, {}, kOk};
          try {
            if (!env) env = make_environment(o.cfg);
            if (!gcm) gcm = o.cfg.gcm_file.empty() ? build_gcm(*env, o.cfg.channel, o.cfg.grid) : load_cached_gcm(o.cfg, *env);
            o.log = run_trial(o.cfg, *env, *gcm);
            write_trial_outputs(root / o.point / solver_name(solver) / trial_dir_name(seed), *o.log, o.cfg, *env,
                                spec.write_trajectories);
            log << o.point << ' ' << solver_name(solver) << " seed " << seed << ": ACR " << o.log->acr_simplified
                << " (actual " << o.log->acr_actual << ")\n";
          } catch (const std::exception& e) {
            o.error = e.what();
            o.code = exit_code_for(e);
            log << o.point << ' ' << solver_name(solver) << " seed " << seed << ": error: " << e.what() << '\n';
          }
          outcomes.push_back(std::move(o));
        }
      }
    }

    json manifest = {{"format", "gcmopt-run"}, {"version", kConfigVersion}, {"trials", json::array()}};
    for (const auto& o : outcomes) {
      json t = {{"point", o.point},
                {"solver", solver_name(o.solver)},
                {"seed", o.seed},
                {"dir", (fs::path(o.point) / solver_name(o.solver) / trial_dir_name(o.seed)).generic_string()},
                {"abs_count", o.cfg.abs_count},
                {"gu_count", o.cfg.gu_count},
                {"block_count", o.cfg.environment.block_count},
                {"grid_length", o.cfg.grid.abs_cell_x()},
                {"ok", o.log.has_value()}};
      if (!o.error.empty()) t["error"] = o.error;
      manifest["trials"].push_back(t);
    }
    write_text_file(root / "manifest.json", manifest.dump(2) + "\n");

    // Group by (point, solver) in first-seen order.
    std::vector<std::pair<std::string, SolverKind>> groups;
    for (const auto& o : outcomes) {
      const std::pair<std::string, SolverKind> key{o.point, o.solver};
      if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
    }
    std::string summary =
        "solver,point,abs_count,gu_count,block_count,grid_length,trials,failed,acr_mean,acr_std,acr_actual_mean,"
        "acr_actual_std,quantization_error_mean,planning_seconds_mean\n";
    std::string sensitivity = "solver,grid_length,trials,acr_simplified_mean,acr_actual_mean,quantization_error_mean\n";
    for (const auto& [point, solver] : groups) {
      std::vector<double> acr, actual, quant, planning;
      int failed = 0;
      const TrialConfig* cfg = nullptr;
      for (const auto& o : outcomes) {
        if (o.point != point || o.solver != solver) continue;
        cfg = &o.cfg;
        if (!o.log) {
          ++failed;
          continue;
        }
        acr.push_back(o.log->acr_simplified);
        actual.push_back(o.log->acr_actual);
        quant.push_back(o.log->acr_simplified - o.log->acr_actual);
        planning.push_back(o.log->mean_planning_seconds());
      }
      const Stats a = stats_of(acr);
      const Stats b = stats_of(actual);
      const Stats q = stats_of(quant);
      const Stats t = stats_of(planning);
      summary += std::string(solver_name(solver)) + ',' + point + ',' + std::to_string(cfg->abs_count) + ',' +
                 std::to_string(cfg->gu_count) + ',' + std::to_string(cfg->environment.block_count) + ',' +
                 format_double(cfg->grid.abs_cell_x()) + ',' + std::to_string(a.count) + ',' + std::to_string(failed) +
                 ',' + format_double(a.mean) + ',' + format_double(a.stddev) + ',' + format_double(b.mean) + ',' +
                 format_double(b.stddev) + ',' + format_double(q.mean) + ',' + format_double(t.mean) + '\n';
      sensitivity += std::string(solver_name(solver)) + ',' + format_double(cfg->grid.abs_cell_x()) + ',' +
                     std::to_string(a.count) + ',' + format_double(a.mean) + ',' + format_double(b.mean) + ',' +
                     format_double(q.mean) + '\n';
    }
    write_text_file(root / "summary.csv", summary);
    if (!spec.sweep.grid_length.empty()) write_text_file(root / "grid_sensitivity.csv", sensitivity);
    log << "wrote " << (root / "summary.csv").string() << '\n';

    for (const auto& o : outcomes) {
      if (o.code != kOk) return o.code;
    }
    return static_cast<int>(kOk);
  });
}

int cmd_plot_data(const fs::path& run_dir_arg, std::ostream& log) {
  return guarded(log, [&] {
    const fs::path run_dir = resolve_output(run_dir_arg);
    const fs::path manifest_path = run_dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw io_error(run_dir.string() + " has no run manifest");
    const json manifest = read_json_file(manifest_path);
    if (!manifest.contains("trials") || manifest.at("trials").empty()) throw io_error("run manifest lists no trials");

    struct StepAcc {
      double simplified = 0.0;
      double actual = 0.0;
      int trials = 0;
    };
    // Keys are (point, solver, step); std::map keeps the output order stable.
    std::map<std::tuple<std::string, std::string, int>, StepAcc> steps;
    std::map<std::tuple<std::string, std::string>, std::vector<double>> acr_by_point;
    std::map<std::tuple<std::string, std::string>, json> point_info;
    std::map<std::tuple<int, std::string>, std::vector<double>> acr_by_blocks;
    std::string trajectories = "point,solver,seed,step,role,index,x,y\n";
    std::string blocks = "point,seed,x,y,half_width,height\n";
    std::set<std::pair<std::string, std::uint64_t>> blocks_done;
    int used = 0;

    for (const auto& t : manifest.at("trials")) {
      if (!t.value("ok", false)) continue;
      const std::string point = t.at("point");
      const std::string solver = t.at("solver");
      const auto seed = t.at("seed").get<std::uint64_t>();
      const fs::path dir = run_dir / t.at("dir").get<std::string>();
      const auto rows = read_csv(dir / "metrics.csv");
      if (rows.empty() || rows.front() != std::vector<std::string>{"step", "period", "cr_simplified", "cr_actual"}) {
        throw io_error("unexpected metrics header in " + dir.string());
      }
      for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 4) throw io_error("malformed metrics row in " + dir.string());
        auto& acc = steps[{point, solver, static_cast<int>(number_field(rows[r][0], dir))}];
        acc.simplified += number_field(rows[r][2], dir);
        acc.actual += number_field(rows[r][3], dir);
        ++acc.trials;
      }
      const json summary = read_json_file(dir / "summary.json");
      const double acr = summary.at("acr_simplified");
      acr_by_point[{point, solver}].push_back(acr);
      point_info[{point, solver}] = t;
      acr_by_blocks[{t.at("block_count").get<int>(), solver}].push_back(acr);

      if (fs::exists(dir / "trajectory.json")) {
        const json traj = read_json_file(dir / "trajectory.json");
        for (const char* role : {"abs", "gu"}) {
          const auto& track = traj.at(role);
          for (std::size_t step = 0; step < track.size(); ++step) {
            for (std::size_t i = 0; i < track[step].size(); ++i) {
              trajectories += point + ',' + solver + ',' + std::to_string(seed) + ',' + std::to_string(step) + ',' +
                              role + ',' + std::to_string(i) + ',' + format_double(track[step][i][0].get<double>()) +
                              ',' + format_double(track[step][i][1].get<double>()) + '\n';
            }
          }
        }
        if (blocks_done.insert({point, seed}).second) {
          for (const auto& b : traj.at("environment").at("blocks")) {
            blocks += point + ',' + std::to_string(seed) + ',' + format_double(b.at("x").get<double>()) + ',' +
                      format_double(b.at("y").get<double>()) + ',' + format_double(b.at("half_width").get<double>()) +
                      ',' + format_double(b.at("height").get<double>()) + '\n';
          }
        }
      }
      ++used;
    }
    if (used == 0) throw io_error("run has no successful trials");

    const fs::path out = run_dir / "plot";
    std::string stepwise = "point,solver,step,trials,cr_simplified_mean,cr_actual_mean\n";
    for (const auto& [key, acc] : steps) {
      const auto& [point, solver, step] = key;
      stepwise += point + ',' + solver + ',' + std::to_string(step) + ',' + std::to_string(acc.trials) + ',' +
                  format_double(acc.simplified / acc.trials) + ',' + format_double(acc.actual / acc.trials) + '\n';
    }
    std::string by_point = "point,solver,abs_count,gu_count,block_count,grid_length,trials,acr_mean,acr_std\n";
    for (const auto& [key, values] : acr_by_point) {
      const auto& [point, solver] = key;
      const json& info = point_info.at(key);
      const Stats s = stats_of(values);
      by_point += point + ',' + solver + ',' + std::to_string(info.at("abs_count").get<int>()) + ',' +
                  std::to_string(info.at("gu_count").get<int>()) + ',' +
                  std::to_string(info.at("block_count").get<int>()) + ',' +
                  format_double(info.at("grid_length").get<double>()) + ',' + std::to_string(s.count) + ',' +
                  format_double(s.mean) + ',' + format_double(s.stddev) + '\n';
    }
    std::string by_blocks = "block_count,solver,trials,acr_mean,acr_std\n";
    for (const auto& [key, values] : acr_by_blocks) {
      const auto& [count, solver] = key;
      const Stats s = stats_of(values);
      by_blocks += std::to_string(count) + ',' + solver + ',' + std::to_string(s.count) + ',' + format_double(s.mean) +
                   ',' + format_double(s.stddev) + '\n';
    }
    write_text_file(out / "stepwise_cr.csv", stepwise);
    write_text_file(out / "acr_by_point.csv", by_point);
    write_text_file(out / "acr_by_blocks.csv", by_blocks);
    write_text_file(out / "trajectories.csv", trajectories);
    write_text_file(out / "blocks.csv", blocks);
    log << "wrote plot data for " << used << " trials to " << out.string() << '\n';
    return static_cast<int>(kOk);
  });
}

int main(int argc, char** argv) {
  CLI::App app{"ABS placement over a global connectivity map"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  auto* build = app.add_subcommand("build-gcm", "Build and cache the connectivity map for a trial config");
  build->add_option("config", config, "Trial config (JSON)")->required();
  build->add_option("-o,--out", out, "Output map file")->required();

  std::string experiment;
  auto* run = app.add_subcommand("run", "Run every trial of an experiment");
  run->add_option("experiment", experiment, "Experiment spec (JSON)")->required();

  std::string run_dir;
  auto* plot = app.add_subcommand("plot-data", "Emit plot-ready CSVs from a completed run");
  plot->add_option("run_dir", run_dir, "Run output directory")->required();

  std::string check;
  auto* validate = app.add_subcommand("validate-config", "Check a trial config or experiment spec");
  validate->add_option("config", check, "Config file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? static_cast<int>(kOk) : static_cast<int>(kUsage);
  }

  if (*build) return cmd_build_gcm(config, out, std::cerr);
  if (*run) return cmd_run(experiment, std::cerr);
  if (*plot) return cmd_plot_data(run_dir, std::cerr);
  if (*validate) return cmd_validate_config(check, std::cerr);
  return kUsage;
}

}  // namespace gcmopt::cli
