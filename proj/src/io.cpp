#include "gcmopt/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gcmopt/config.hpp"
#include "gcmopt/error.hpp"

namespace gcmopt {

std::string format_double(double v) {
  char buf[40];
  // Try increasing precision until the text parses back to the same value.
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string metrics_csv(const TrialLog& log) {
  std::string out = "step,period,cr_simplified,cr_actual\n";
  for (const auto& s : log.steps) {
    out += std::to_string(s.step) + ',' + std::to_string(s.period) + ',' + format_double(s.simplified) + ',' +
           format_double(s.actual) + '\n';
  }
  return out;
}

std::string periods_csv(const TrialLog& log, int gu_count) {
  std::string out = "period,planned_at_step,solver,coverage,coverage_rate,gap_bound,rows,cols,cells,oracle_coverage\n";
  for (const auto& p : log.periods) {
    std::string cells;
    for (int u : p.report.best.cells) cells += (cells.empty() ? "" : " ") + std::to_string(u);
    out += std::to_string(p.period) + ',' + std::to_string(p.planned_at_step) + ',' + p.report.solver + ',' +
           format_double(p.report.best.coverage) + ',' + format_double(p.report.best.coverage / gu_count) + ',' +
           format_double(p.report.gap_bound) + ',' + std::to_string(p.rows) + ',' + std::to_string(p.cols) + ',' +
           cells + ',' + (p.oracle_coverage ? format_double(*p.oracle_coverage) : std::string()) + '\n';
  }
  return out;
}

std::string timing_csv(const TrialLog& log) {
  std::string out = "period,wall_seconds,solver_seconds,over_budget,oracle_seconds\n";
  for (const auto& p : log.periods) {
    out += std::to_string(p.period) + ',' + format_double(p.wall_seconds) + ',' +
           format_double(p.report.elapsed_seconds) + ',' + (p.over_budget ? "1" : "0") + ',' +
           (p.oracle_seconds ? format_double(*p.oracle_seconds) : std::string()) + '\n';
  }
  return out;
}

nlohmann::json trajectory_json(const TrialLog& log, const Environment& env) {
  const auto points = [](const std::vector<Point2>& ps) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : ps) arr.push_back({p.x, p.y});
    return arr;
  };
  nlohmann::json abs = nlohmann::json::array();
  nlohmann::json gu = nlohmann::json::array();
  for (const auto& s : log.abs_track) abs.push_back(points(s));
  for (const auto& s : log.gu_track) gu.push_back(points(s));
  return {{"format", "gcmopt-trajectory"},
          {"version", kConfigVersion},
          {"environment", environment_to_json(env)},
          {"abs", abs},
          {"gu", gu}};
}

nlohmann::json trial_summary_json(const TrialLog& log, const TrialConfig& cfg) {
  int over_budget = 0;
  for (const auto& p : log.periods) over_budget += p.over_budget ? 1 : 0;
  return {{"solver", solver_name(cfg.solver.kind)},
          {"abs_count", cfg.abs_count},
          {"gu_count", cfg.gu_count},
          {"block_count", cfg.environment.block_count},
          {"grid_length", cfg.grid.abs_cell_x()},
          {"mobility_seed", cfg.mobility_seed},
          {"environment_seed", cfg.environment.seed},
          {"steps", static_cast<int>(log.steps.size())},
          {"acr_simplified", log.acr_simplified},
          {"acr_actual", log.acr_actual},
          {"quantization_error", log.acr_simplified - log.acr_actual},
          {"mean_planning_seconds", log.mean_planning_seconds()},
          {"periods_over_budget", over_budget}};
}

void write_trial_outputs(const std::filesystem::path& dir, const TrialLog& log, const TrialConfig& cfg,
                         const Environment& env, bool with_trajectory) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "metrics.csv", metrics_csv(log));
  write_text_file(dir / "periods.csv", periods_csv(log, cfg.gu_count));
  write_text_file(dir / "timing.csv", timing_csv(log));
  write_text_file(dir / "summary.json", trial_summary_json(log, cfg).dump(2) + "\n");
  write_text_file(dir / "config.json", trial_config_to_json(cfg).dump(2) + "\n");
  if (with_trajectory) write_text_file(dir / "trajectory.json", trajectory_json(log, env).dump() + "\n");
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

Stats stats_of(const std::vector<double>& values) {
  Stats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / (s.count - 1));
  }
  return s;
}

}  // namespace gcmopt
