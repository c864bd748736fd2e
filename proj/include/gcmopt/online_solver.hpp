#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcmopt/bilp.hpp"

namespace gcmopt {

/// Decision when r_t equals e_t'y exactly.
enum class TieRule { kZero, kOne };

/// Common result shape for every planner (online, oracle, K-means+EA).
struct SolverReport {
  std::string solver;
  Placement best;
  std::vector<double> restart_coverage;
  double elapsed_seconds = 0.0;
  double gap_bound = 0.0;
  double step_size = 0.0;
  int duplication = 0;
  std::uint64_t variable_visits = 0;
};

nlohmann::json report_to_json(const SolverReport& report);

struct OnlineSolverOptions {
  int duplication = 3;                 // K restarts
  std::optional<double> step_size;     // default 1/sqrt(|V|+|U'|)
  std::uint64_t seed = 1;
  TieRule tie = TieRule::kZero;
  bool reset_dual = false;  // start every restart from y = 0 instead of carrying y over
  /// Current ABS cells (one per ABS). When given, a restart must beat this placement to replace it.
  std::vector<int> incumbent;
  /// Called after every dual update with (restart, y).
  std::function<void(int, std::span<const double>)> on_iterate;
  /// Called with the primal vector x after each restart, before repair.
  std::function<void(int, std::span<const std::uint8_t>)> on_restart;
};

double default_step_size(const BilpInstance& inst);

/**
 * @brief One-pass projected stochastic subgradient descent in the dual, with restarts.
 *
 * The first restart starts from y = 0 and later ones continue from the previous
 * dual. Each restart visits all variables in a fresh random order, fixes x_t by
 * comparing r_t with e_t'y and moves y along e_t x_t - d with projection onto
 * y >= 0. The primal vector is decoded and repaired into an N-cell placement; the
 * best placement over all restarts (and the incumbent, if any) is returned; equal
 * coverage goes to the shorter total movement.
 */
SolverReport solve_online(const BilpInstance& inst, const FeasibleSets& fs, const OnlineSolverOptions& options);

/**
 * @brief Turn a primal vector into a feasible placement.
 *
 * Selected cells are pruned to N by repeatedly dropping the one with the least
 * marginal coverage, matched to ABSs by augmenting paths over U'_n membership,
 * and any unmatched ABS receives its best unused reachable cell. Ties prefer the
 * cell nearest the ABS, then the lower index. The final cells are reassigned among
 * ABSs by assign_min_movement.
 */
Placement decode_and_repair(std::span<const std::uint8_t> x, const BilpInstance& inst, const FeasibleSets& fs);

/// Same, from an explicit list of selected cells.
Placement repair_selection(std::span<const int> selected_cells, const BilpInstance& inst, const FeasibleSets& fs);

/// (|V|+|U'|) f(y) = l'y + sum_k (r_k - e_k'y)^+ ; an upper bound on the LP optimum for y >= 0.
double dual_objective(const BilpInstance& inst, std::span<const double> y);

/// rows * (e_max + d_max)^2 * sqrt(cols) / sqrt(K).
double gap_bound(const BilpInstance& inst, int duplication);

/// Sum of horizontal distances from each ABS's current center to its assigned cell.
double total_movement(std::span<const int> cells, const FeasibleSets& fs, const GridSpec& spec);

/// Reorders cells among ABSs to minimize total_movement while keeping every cell
/// reachable by its ABS. Leaves the order alone when no shorter feasible order exists.
void assign_min_movement(std::vector<int>& cells, const FeasibleSets& fs, const GridSpec& spec);

/// Fill positions and coverage of a placement from its cells.
void finalize_placement(Placement& placement, const BilpInstance& inst);

}  // namespace gcmopt
