#pragma once

// Independent reference implementations used only by the tests. None of them share
// code with the library beyond plain data types.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "gcmopt/bilp.hpp"
#include "gcmopt/env.hpp"
#include "gcmopt/gcm.hpp"
#include "gcmopt/rng.hpp"

namespace oracle {

using gcmopt::Point2;
using gcmopt::Point3;

// ---- geometry ----

/// Buckets block footprints on a square grid so point-in-block queries stay cheap.
class BlockIndex {
 public:
  BlockIndex(const gcmopt::Environment& env, double bucket);
  /// True iff p is strictly inside some block (open box).
  bool inside_any(Point3 p) const;

 private:
  const gcmopt::Environment* env_;
  double bucket_;
  int nx_, ny_;
  std::vector<std::vector<int>> cells_;
};

/// Samples p->q every `spacing` meters (endpoints excluded) and reports LoS when no sample is inside a block.
bool los_by_sampling(const BlockIndex& index, Point3 p, Point3 q, double spacing);

/// Length in meters of the part of p->q strictly inside block b, by clipping against each axis slab
/// one coordinate at a time (written independently of the library's slab code).
double chord_length(Point3 p, Point3 q, const gcmopt::BuildingBlock& b);

// ---- channel ----

struct McEstimate {
  double p = 0.0;
  long draws = 0;
};

/// Fraction of unit-mean Rician power draws with factor k falling below x.
McEstimate rician_cdf_mc(double k, double x, long draws, std::uint64_t seed);

// ---- linear programming ----

/// Dense two-phase simplex for  max c'x  s.t.  A x <= b,  x >= 0  (b of any sign).
struct LpResult {
  enum Status { kOptimal, kInfeasible, kUnbounded } status = kOptimal;
  double value = 0.0;
  std::vector<double> x;
};

LpResult solve_lp(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                  const std::vector<double>& c);

/// E as a dense matrix.
std::vector<std::vector<double>> dense_matrix(const gcmopt::BilpInstance& inst);

/// LP relaxation of the instance (0 <= x <= 1).
LpResult lp_relaxation(const gcmopt::BilpInstance& inst);

/// Dual  min l'y + 1's  s.t.  E'y + s >= r,  y, s >= 0.  Returns the optimum and y.
struct DualLp {
  double value = 0.0;
  std::vector<double> y;
};
DualLp dual_lp(const gcmopt::BilpInstance& inst);

/// max r'x over binary x with E x <= l, by enumerating all 2^cols vectors.
double ilp_optimum(const gcmopt::BilpInstance& inst);

/// Invokes f(x) for every binary x satisfying E x <= l.
template <typename F>
void for_each_feasible_binary(const gcmopt::BilpInstance& inst, F&& f);

/// Best placement value with distinct cells and cell n drawn from per_abs[n], by
/// plain recursion and direct Z lookups.
double placement_optimum(const gcmopt::Gcm& gcm, const gcmopt::FeasibleSets& fs,
                         const std::vector<Point2>& gu);

/// Weighted coverage straight from Z and GU cells, one GU at a time.
double coverage_of(const gcmopt::Gcm& gcm, const std::vector<int>& cells, const std::vector<Point2>& gu);

// ---- clustering ----

struct TwoMeans {
  double sse = 0.0;
  Point2 a, b;
};

/// Minimum within-cluster sum of squares over all 2-partitions.
TwoMeans exhaustive_two_means(const std::vector<Point2>& points);

// ---- random tiny instances ----

struct TinyCase {
  gcmopt::GridSpec spec;
  gcmopt::Gcm gcm;
  gcmopt::FeasibleSets fs;
  std::vector<Point2> gu;
  int abs_count = 1;
};

struct TinyShape {
  int grid = 4;          // k1 = k2 = k1p = k2p
  int max_abs = 2;
  int min_set = 1;
  int max_set = 4;
  int max_gu = 6;
  double density = 0.35;  // Pr(z_uv = 1)
};

/// Random Z, random per-ABS candidate sets (with at least abs_count distinct cells
/// overall so a placement exists) and random GU positions.
TinyCase random_tiny_case(gcmopt::Rng& rng, const TinyShape& shape = {});

// ---- implementation of the template ----

template <typename F>
void for_each_feasible_binary(const gcmopt::BilpInstance& inst, F&& f) {
  const int cols = inst.cols();
  std::vector<std::uint8_t> x(static_cast<std::size_t>(cols));
  std::vector<double> lhs(inst.l.size());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cols); ++mask) {
    std::fill(lhs.begin(), lhs.end(), 0.0);
    for (int k = 0; k < cols; ++k) {
      x[static_cast<std::size_t>(k)] = (mask >> k) & 1U;
      if (!x[static_cast<std::size_t>(k)]) continue;
      for (const auto& e : inst.column(k)) lhs[static_cast<std::size_t>(e.row)] += e.value;
    }
    bool ok = true;
    for (std::size_t i = 0; i < lhs.size() && ok; ++i) ok = lhs[i] <= inst.l[i] + 1e-12;
    if (ok) f(x);
  }
}

}  // namespace oracle
