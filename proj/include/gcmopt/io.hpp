#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcmopt/sim.hpp"

namespace gcmopt {

/// Shortest "%.17g" rendering; the same double always prints the same bytes.
std::string format_double(double v);

/// step,period,cr_simplified,cr_actual
std::string metrics_csv(const TrialLog& log);
/// Per-period solver outcome without wall times, so reruns compare byte for byte.
std::string periods_csv(const TrialLog& log, int gu_count);
/// period,wall_seconds,solver_seconds,over_budget,oracle_seconds
std::string timing_csv(const TrialLog& log);

nlohmann::json trajectory_json(const TrialLog& log, const Environment& env);
nlohmann::json trial_summary_json(const TrialLog& log, const TrialConfig& cfg);

/// metrics.csv, periods.csv, timing.csv, summary.json, config.json and optionally trajectory.json.
void write_trial_outputs(const std::filesystem::path& dir, const TrialLog& log, const TrialConfig& cfg,
                         const Environment& env, bool with_trajectory);

/// Plain comma-separated reader (no quoting); first row is the header.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
  int count = 0;
};

Stats stats_of(const std::vector<double>& values);

}  // namespace gcmopt
