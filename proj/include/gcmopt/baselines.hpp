#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gcmopt/bilp.hpp"
#include "gcmopt/online_solver.hpp"

namespace gcmopt {

struct OracleOptions {
  double enumeration_cap = 5e6;  // largest prod_n |U'_n| enumerated exhaustively
  bool branch_and_bound = true;  // used above the cap; otherwise the oracle refuses

  friend bool operator==(const OracleOptions&, const OracleOptions&) = default;
};

/**
 * @brief Exact maximum coverage over placements with distinct cells, cell n in U'_n.
 *
 * Small instances are enumerated outright. Larger ones use depth-first branch and
 * bound whose bound adds, for every unassigned ABS, its best marginal gain over
 * the current coverage; coverage is submodular so the bound never underestimates.
 */
SolverReport exact_optimum(const BilpInstance& inst, const FeasibleSets& fs, const OracleOptions& options = {});

/// Lloyd's algorithm with k-means++ seeding on horizontal GU positions.
std::vector<Point2> kmeans(std::span<const Point2> points, int k, std::uint64_t seed, int max_iterations = 100,
                           double tolerance = 1e-6);

/// Centroids snapped to the nearest valid ABS cells (distinct); coverage from Z.
Placement kmeans_init(const Gcm& gcm, std::span<const Point2> gu_positions, int abs_count, std::uint64_t seed);

struct EaConfig {
  int rounds = 3000;                       // K_m mutants per planning call
  std::optional<double> mutation_radius;  // defaults to the movement radius
  std::uint64_t seed = 1;
};

/**
 * @brief One planning call of the evolutionary baseline.
 *
 * Each mutant redraws every ABS cell uniformly from the cells of U'_n within the
 * mutation radius of the incumbent cell, keeping cells distinct. The best of the
 * incumbent and all mutants is returned; the incumbent wins ties.
 */
SolverReport ea_step(const Placement& current, const BilpInstance& inst, const FeasibleSets& fs, const EaConfig& cfg);

/// Moves each ABS's K-means target into its own feasible set: ABSs pick the nearest
/// remaining centroid in order, then the reachable free cell nearest to it.
Placement project_to_feasible(std::span<const Point2> targets, const BilpInstance& inst, const FeasibleSets& fs);

}  // namespace gcmopt
