#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcmopt/baselines.hpp"
#include "gcmopt/channel.hpp"
#include "gcmopt/env.hpp"
#include "gcmopt/gcm.hpp"
#include "gcmopt/online_solver.hpp"
#include "gcmopt/rng.hpp"

namespace gcmopt {

/// Durations in seconds. A trial has I = trial/step steps in E = trial/period periods.
struct TimingConfig {
  double trial = 200.0;     // Delta T
  double period = 20.0;     // Delta t
  double flight = 10.0;     // Delta t_f
  double serve = 10.0;      // Delta t_s
  double planning = 5.0;    // Delta t_p
  double step = 1.0;        // Delta tau

  void validate() const;
  int steps() const;             // I
  int steps_per_period() const;  // J
  int periods() const;           // E
  int flight_steps() const;      // F
  int planning_steps() const;    // P

  friend bool operator==(const TimingConfig&, const TimingConfig&) = default;
};

struct EnvironmentConfig {
  int block_count = 300;
  double block_width = 25.0;
  HeightRange heights{30.0, 89.0};
  std::uint64_t seed = 7;

  friend bool operator==(const EnvironmentConfig&, const EnvironmentConfig&) = default;
};

enum class SolverKind { kOnline, kOracle, kKmeansEa };

const char* solver_name(SolverKind kind);
SolverKind parse_solver(const std::string& name);

struct SolverConfig {
  SolverKind kind = SolverKind::kOnline;
  int duplication = 3;
  std::optional<double> step_size;
  TieRule tie = TieRule::kZero;
  OracleOptions oracle;
  int ea_rounds = 3000;
  std::optional<double> mutation_radius;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct TrialConfig {
  GridSpec grid;
  ChannelParams channel;
  EnvironmentConfig environment;
  TimingConfig timing;
  int abs_count = 5;        // N
  int gu_count = 100;       // M
  double abs_max_speed = 30.0;  // V_p^max
  double gu_speed = 2.0;        // V_q
  SolverConfig solver;
  std::uint64_t mobility_seed = 1;
  bool shadow_oracle = false;      // also solve every period exactly, for comparison only
  bool plan_before_start = false;  // plan period 0 at t = 0 instead of hovering through it
  bool weighted = true;
  std::string gcm_file;  // optional cached map

  void validate() const;
  double movement_radius() const { return abs_max_speed * timing.flight; }

  friend bool operator==(const TrialConfig&, const TrialConfig&) = default;
};

/// Moves every GU by speed*dt in a fresh uniform direction; moves that leave the
/// area or end inside a footprint are redrawn, and after 32 failures the GU stays.
std::vector<Point2> step_gu(std::span<const Point2> positions, const Environment& env, double speed, double dt,
                            Rng& rng);

/**
 * @brief One step of straight-line flight.
 *
 * With `remaining_steps` flight steps left, each ABS covers 1/remaining_steps of
 * its remaining distance, which keeps its speed constant over the flight phase,
 * and lands exactly on the target at the last step. Throws a contract Error if
 * the target cannot be reached at max_speed.
 */
std::vector<Point2> fly_step(std::span<const Point2> current, std::span<const Point2> target, double max_speed,
                             double dt, int remaining_steps);

struct StepRecord {
  int step = 0;    // 1..I
  int period = 0;  // 0-based
  double simplified = 0.0;
  double actual = 0.0;
};

struct PeriodRecord {
  int period = 0;
  int planned_at_step = 0;
  double wall_seconds = 0.0;
  bool over_budget = false;  // wall time exceeded Delta t_p
  SolverReport report;
  std::vector<Point2> centers;  // ABS positions the feasible sets were built around
  double radius = 0.0;
  int rows = 0;
  int cols = 0;
  std::optional<double> oracle_coverage;
  std::optional<double> oracle_seconds;
};

struct TrialLog {
  std::vector<StepRecord> steps;
  std::vector<PeriodRecord> periods;
  std::vector<std::vector<Point2>> abs_track;  // index 0 is the initial state
  std::vector<std::vector<Point2>> gu_track;
  double acr_simplified = 0.0;
  double acr_actual = 0.0;

  double mean_planning_seconds() const;
};

/// Nearest valid ABS cell to a horizontal position (ties: lower index).
int nearest_valid_cell(const Gcm& gcm, Point2 xy);

/// Step-wise coverage rate with ABSs snapped to valid cells and GUs to their cells.
double simplified_coverage(const Gcm& gcm, std::span<const Point2> abs_positions, std::span<const Point2> gu_positions);

/// Step-wise coverage rate from the channel chain at the continuous positions.
double actual_coverage(const ChannelParams& params, const Environment& env, std::span<const Point2> abs_positions,
                       std::span<const Point2> gu_positions);

/// Mutable per-trial planner state (the evolutionary baseline needs to know its first call).
struct PlannerState {
  bool planned_before = false;
};

/**
 * @brief Plan one period: feasible sets of radius V_p^max * Delta t_f around
 * `centers`, instance assembly and the configured solver. Wall time covers all three.
 */
PeriodRecord plan_period(const TrialConfig& cfg, const Environment& env, const Gcm& gcm,
                         std::span<const Point2> centers, std::span<const Point2> gu_positions, int period,
                         PlannerState& state);

Environment make_environment(const TrialConfig& cfg);

/// Runs a full trial against a prebuilt environment and map.
TrialLog run_trial(const TrialConfig& cfg, const Environment& env, const Gcm& gcm);

/// Generates the environment and builds the map (or loads cfg.gcm_file) first.
TrialLog run_trial(const TrialConfig& cfg);

}  // namespace gcmopt
