#include "gcmopt/sim.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "gcmopt/config.hpp"
#include "gcmopt/error.hpp"

namespace gcmopt {

namespace {

using Clock = std::chrono::steady_clock;

int whole_ratio(double num, double den, const char* what) {
  const double q = num / den;
  const double r = std::round(q);
  if (r < 0.0 || std::abs(q - r) > 1e-9 * std::max(1.0, r)) {
    throw config_error(std::string(what) + " is not a whole number of steps");
  }
  return static_cast<int>(r);
}

std::vector<Point2> horizontal_positions(const Placement& p) {
  std::vector<Point2> out;
  for (const auto& q : p.positions) out.push_back(horizontal(q));
  return out;
}

std::vector<Point2> initial_abs_positions(const TrialConfig& cfg, const Gcm& gcm, Rng& rng) {
  std::vector<int> valid;
  for (int u = 0; u < cfg.grid.abs_cells(); ++u) {
    if (gcm.abs_valid(u)) valid.push_back(u);
  }
  if (static_cast<int>(valid.size()) < cfg.abs_count) throw config_error("fewer valid ABS cells than ABSs");
  std::vector<Point2> out;
  // Partial Fisher-Yates: the first N entries become a uniform sample without replacement.
  for (int n = 0; n < cfg.abs_count; ++n) {
    const auto pick = static_cast<std::size_t>(n) + uniform_index(rng, valid.size() - static_cast<std::size_t>(n));
    std::swap(valid[static_cast<std::size_t>(n)], valid[pick]);
    out.push_back(horizontal(cell_center_abs(valid[static_cast<std::size_t>(n)], cfg.grid)));
  }
  return out;
}

std::vector<Point2> initial_gu_positions(const TrialConfig& cfg, const Environment& env, Rng& rng) {
  constexpr int kRetries = 100000;
  std::vector<Point2> out;
  for (int m = 0; m < cfg.gu_count; ++m) {
    bool placed = false;
    for (int attempt = 0; attempt < kRetries && !placed; ++attempt) {
      const double x = uniform(rng, 0.0, cfg.grid.d1);
      const Point2 q{x, uniform(rng, 0.0, cfg.grid.d2)};
      if (!env.in_footprint(q)) {
        out.push_back(q);
        placed = true;
      }
    }
    if (!placed) throw config_error("no free ground to place GUs");
  }
  return out;
}

}  // namespace

void TimingConfig::validate() const {
  if (!(step > 0.0)) throw config_error("step duration must be positive");
  if (!(period > 0.0) || !(trial > 0.0)) throw config_error("trial and period durations must be positive");
  if (!(flight > 0.0)) throw config_error("flight phase must be positive");
  if (serve < 0.0 || planning < 0.0) throw config_error("serving and planning durations must be non-negative");
  if (std::abs(flight + serve - period) > 1e-9 * period) throw config_error("flight + serving must equal the period");
  if (planning > period) throw config_error("planning duration exceeds the period");
  whole_ratio(trial, step, "trial");
  whole_ratio(period, step, "period");
  whole_ratio(flight, step, "flight phase");
  whole_ratio(planning, step, "planning duration");
  whole_ratio(trial, period, "trial length in periods");
}

int TimingConfig::steps() const { return whole_ratio(trial, step, "trial"); }
int TimingConfig::steps_per_period() const { return whole_ratio(period, step, "period"); }
int TimingConfig::periods() const { return whole_ratio(trial, period, "trial length in periods"); }
int TimingConfig::flight_steps() const { return whole_ratio(flight, step, "flight phase"); }
int TimingConfig::planning_steps() const { return whole_ratio(planning, step, "planning duration"); }

const char* solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::kOnline:
      return "online";
    case SolverKind::kOracle:
      return "oracle";
    case SolverKind::kKmeansEa:
      return "kmeans-ea";
  }
  return "unknown";
}

SolverKind parse_solver(const std::string& name) {
  if (name == "online") return SolverKind::kOnline;
  if (name == "oracle") return SolverKind::kOracle;
  if (name == "kmeans-ea") return SolverKind::kKmeansEa;
  throw config_error("unknown solver '" + name + "' (expected online, oracle or kmeans-ea)");
}

void TrialConfig::validate() const {
  grid.validate();
  channel.validate();
  timing.validate();
  if (grid.abs_alt != channel.abs_alt) throw config_error("grid and channel disagree on the ABS altitude");
  if (abs_count < 1) throw config_error("at least one ABS is required");
  if (gu_count < 1) throw config_error("at least one GU is required");
  if (!(abs_max_speed > 0.0)) throw config_error("ABS speed must be positive");
  if (gu_speed < 0.0) throw config_error("GU speed must be non-negative");
  if (environment.block_count < 0) throw config_error("block count must be non-negative");
  if (solver.duplication < 1) throw config_error("duplication factor must be at least 1");
  if (solver.step_size && !(*solver.step_size > 0.0)) throw config_error("step size must be positive");
  if (solver.ea_rounds < 1) throw config_error("EA rounds must be at least 1");
  if (solver.mutation_radius) {
    if (!(*solver.mutation_radius > 0.0)) throw config_error("mutation radius must be positive");
    if (*solver.mutation_radius > movement_radius()) throw config_error("mutation radius exceeds the movement radius");
  }
  if (solver.kind == SolverKind::kKmeansEa && gu_count < abs_count) {
    throw config_error("K-means initialization needs at least as many GUs as ABSs");
  }
}

std::vector<Point2> step_gu(std::span<const Point2> positions, const Environment& env, double speed, double dt,
                            Rng& rng) {
  std::vector<Point2> out(positions.begin(), positions.end());
  const double reach = speed * dt;
  if (reach == 0.0) return out;
  constexpr int kRetries = 32;
  for (auto& q : out) {
    for (int attempt = 0; attempt < kRetries; ++attempt) {
      const double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const Point2 next{q.x + reach * std::cos(heading), q.y + reach * std::sin(heading)};
      if (env.contains(next) && !env.in_footprint(next)) {
        q = next;
        break;
      }
    }
  }
  return out;
}

std::vector<Point2> fly_step(std::span<const Point2> current, std::span<const Point2> target, double max_speed,
                             double dt, int remaining_steps) {
  if (current.size() != target.size()) throw contract_error("flight target count does not match the ABS count");
  if (remaining_steps < 1) throw contract_error("no flight steps remain");
  std::vector<Point2> out(current.size());
  const double reach = max_speed * dt;
  for (std::size_t n = 0; n < current.size(); ++n) {
    const double dist = distance(current[n], target[n]);
    if (dist > reach * remaining_steps + 1e-9) {
      throw contract_error("ABS " + std::to_string(n) + " cannot reach its target in the flight phase");
    }
    if (remaining_steps == 1) {
      out[n] = target[n];
    } else {
      const double f = 1.0 / remaining_steps;
      out[n] = {current[n].x + f * (target[n].x - current[n].x), current[n].y + f * (target[n].y - current[n].y)};
    }
  }
  return out;
}

double TrialLog::mean_planning_seconds() const {
  if (periods.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : periods) total += p.wall_seconds;
  return total / static_cast<double>(periods.size());
}

int nearest_valid_cell(const Gcm& gcm, Point2 xy) {
  const GridSpec& spec = gcm.spec();
  const int home = abs_cell_of(xy, spec);
  if (gcm.abs_valid(home)) return home;
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int u = 0; u < spec.abs_cells(); ++u) {
    if (!gcm.abs_valid(u)) continue;
    const double d = distance(horizontal(cell_center_abs(u, spec)), xy);
    if (d < best_d) {
      best_d = d;
      best = u;
    }
  }
  if (best < 0) throw contract_error("map has no valid ABS cell");
  return best;
}

double simplified_coverage(const Gcm& gcm, std::span<const Point2> abs_positions, std::span<const Point2> gu_positions) {
  std::vector<int> cells;
  for (const auto& p : abs_positions) cells.push_back(nearest_valid_cell(gcm, p));
  int covered = 0;
  for (const auto& q : gu_positions) {
    const int v = gu_cell_of(q, gcm.spec());
    for (int u : cells) {
      if (gcm.z(u, v)) {
        ++covered;
        break;
      }
    }
  }
  return coverage_rate(covered, static_cast<int>(gu_positions.size()));
}

double actual_coverage(const ChannelParams& params, const Environment& env, std::span<const Point2> abs_positions,
                       std::span<const Point2> gu_positions) {
  int covered = 0;
  for (const auto& q : gu_positions) {
    for (const auto& p : abs_positions) {
      if (is_covered(params, env, lift(p, params.abs_alt), lift(q, params.gu_alt))) {
        ++covered;
        break;
      }
    }
  }
  return coverage_rate(covered, static_cast<int>(gu_positions.size()));
}

PeriodRecord plan_period(const TrialConfig& cfg, const Environment& env, const Gcm& gcm,
                         std::span<const Point2> centers, std::span<const Point2> gu_positions, int period,
                         PlannerState& state) {
  PeriodRecord rec;
  rec.period = period;
  rec.centers.assign(centers.begin(), centers.end());
  rec.radius = cfg.movement_radius();
  const std::uint64_t seed = derive_seed(cfg.mobility_seed, "solver", static_cast<std::uint64_t>(period));

  const auto start = Clock::now();
  const FeasibleSets fs = feasible_sets(centers, cfg.grid, env, rec.radius);
  const BilpInstance inst = assemble(gcm, fs, gu_positions, cfg.abs_count, cfg.weighted);
  switch (cfg.solver.kind) {
    case SolverKind::kOnline: {
      OnlineSolverOptions opts;
      opts.duplication = cfg.solver.duplication;
      opts.step_size = cfg.solver.step_size;
      opts.tie = cfg.solver.tie;
      opts.seed = seed;
      for (const auto& c : centers) opts.incumbent.push_back(abs_cell_of(c, cfg.grid));
      rec.report = solve_online(inst, fs, opts);
      break;
    }
    case SolverKind::kOracle:
      rec.report = exact_optimum(inst, fs, cfg.solver.oracle);
      break;
    case SolverKind::kKmeansEa: {
      Placement incumbent;
      if (!state.planned_before) {
        const auto targets = kmeans(gu_positions, cfg.abs_count, seed);
        incumbent = project_to_feasible(targets, inst, fs);
      } else {
        for (const auto& c : centers) incumbent.cells.push_back(abs_cell_of(c, cfg.grid));
        finalize_placement(incumbent, inst);
      }
      EaConfig ea;
      ea.rounds = cfg.solver.ea_rounds;
      ea.mutation_radius = cfg.solver.mutation_radius;
      ea.seed = seed;
      rec.report = ea_step(incumbent, inst, fs, ea);
      break;
    }
  }
  rec.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  rec.over_budget = rec.wall_seconds > cfg.timing.planning;
  rec.rows = inst.rows();
  rec.cols = inst.cols();
  state.planned_before = true;

  if (cfg.shadow_oracle) {
    const auto oracle_start = Clock::now();
    const SolverReport exact = exact_optimum(inst, fs, cfg.solver.oracle);
    rec.oracle_seconds = std::chrono::duration<double>(Clock::now() - oracle_start).count();
    rec.oracle_coverage = exact.best.coverage;
  }
  return rec;
}

Environment make_environment(const TrialConfig& cfg) {
  return generate_environment(cfg.grid.d1, cfg.grid.d2, cfg.environment.block_count, cfg.environment.block_width,
                              cfg.environment.heights, cfg.environment.seed);
}

TrialLog run_trial(const TrialConfig& cfg, const Environment& env, const Gcm& gcm) {
  cfg.validate();
  if (!(gcm.spec() == cfg.grid)) throw config_error("map grid does not match the trial grid");
  if (gcm.outage_threshold() != cfg.channel.outage_threshold || gcm.gu_alt() != cfg.channel.gu_alt) {
    throw config_error("map was built for a different outage threshold or GU height");
  }
  if (env.d1() != cfg.grid.d1 || env.d2() != cfg.grid.d2) throw config_error("environment area does not match the grid");

  const int steps = cfg.timing.steps();
  const int per = cfg.timing.steps_per_period();
  const int periods = cfg.timing.periods();
  const int flight = cfg.timing.flight_steps();
  const int lead = cfg.timing.planning_steps();

  Rng abs_rng(derive_seed(cfg.mobility_seed, "abs"));
  Rng gu_rng(derive_seed(cfg.mobility_seed, "gu"));
  std::vector<Point2> abs = initial_abs_positions(cfg, gcm, abs_rng);
  std::vector<Point2> gu = initial_gu_positions(cfg, env, gu_rng);
  const std::vector<Point2> initial_abs = abs;

  TrialLog log;
  log.abs_track.push_back(abs);
  log.gu_track.push_back(gu);

  std::vector<std::optional<std::vector<Point2>>> planned(static_cast<std::size_t>(periods));
  const auto destination_of = [&](int e) {
    for (; e >= 0; --e) {
      if (planned[static_cast<std::size_t>(e)]) return *planned[static_cast<std::size_t>(e)];
    }
    return initial_abs;
  };
  PlannerState state;
  const auto plan = [&](int e, int at_step) {
    const auto centers = destination_of(e - 1);
    PeriodRecord rec = plan_period(cfg, env, gcm, centers, gu, e, state);
    rec.planned_at_step = at_step;
    planned[static_cast<std::size_t>(e)] = horizontal_positions(rec.report.best);
    log.periods.push_back(std::move(rec));
  };
  // Period p is planned at step p*J - P with the GU positions of that step.
  const auto plan_due = [&](int at_step) {
    if ((at_step + lead) % per != 0) return;
    const int e = (at_step + lead) / per;
    if (e >= 1 && e < periods) plan(e, at_step);
  };

  if (cfg.plan_before_start) plan(0, 0);
  plan_due(0);

  std::vector<Point2> target = abs;
  double sum_simplified = 0.0;
  double sum_actual = 0.0;
  for (int i = 1; i <= steps; ++i) {
    const int e = (i - 1) / per;
    const int f = (i - 1) % per;
    if (f == 0) target = destination_of(e);
    gu = step_gu(gu, env, cfg.gu_speed, cfg.timing.step, gu_rng);
    if (f < flight) abs = fly_step(abs, target, cfg.abs_max_speed, cfg.timing.step, flight - f);

    StepRecord rec;
    rec.step = i;
    rec.period = e;
    rec.simplified = simplified_coverage(gcm, abs, gu);
    rec.actual = actual_coverage(cfg.channel, env, abs, gu);
    sum_simplified += rec.simplified;
    sum_actual += rec.actual;
    log.steps.push_back(rec);
    log.abs_track.push_back(abs);
    log.gu_track.push_back(gu);

    plan_due(i);
  }
  log.acr_simplified = sum_simplified / steps;
  log.acr_actual = sum_actual / steps;
  return log;
}

TrialLog run_trial(const TrialConfig& cfg) {
  cfg.validate();
  const Environment env = make_environment(cfg);
  const Gcm gcm = cfg.gcm_file.empty() ? build_gcm(env, cfg.channel, cfg.grid) : load_cached_gcm(cfg, env);
  return run_trial(cfg, env, gcm);
}

}  // namespace gcmopt
