#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gcmopt/env.hpp"
#include "gcmopt/gcm.hpp"
#include "gcmopt/geometry.hpp"

namespace gcmopt {

/**
 * @brief Cells each ABS can reach within one flight phase.
 *
 * per_abs[n] holds the sorted valid ABS cells whose centers lie within `radius`
 * (horizontal) of centers[n] and whose straight flight path avoids the no-fly set.
 */
struct FeasibleSets {
  std::vector<std::vector<int>> per_abs;
  std::vector<int> all;  // sorted union
  std::vector<Point2> centers;
  double radius = 0.0;

  int abs_count() const { return static_cast<int>(per_abs.size()); }
  bool contains(int n, int u) const;
};

/// Throws a solver Error naming the ABS when its set comes out empty.
FeasibleSets feasible_sets(std::span<const Point2> current, const GridSpec& spec, const Environment& env,
                           double radius);

/// GU grid cells holding at least one GU, with GU counts.
struct GuOccupancy {
  std::vector<int> cells;    // sorted GU grid indices
  std::vector<int> weights;  // GUs per cell
  int total = 0;             // M
};

GuOccupancy occupancy(std::span<const Point2> gu_positions, const GridSpec& spec);

/// Placement: cells[n] is the ABS cell assigned to ABS n.
struct Placement {
  std::vector<int> cells;
  std::vector<Point3> positions;
  double coverage = 0.0;  // weighted covered GU count
};

/// sum_v w_v * min(sum_{u in cells} z_uv, 1) over occupied GU cells.
double evaluate_placement(const Gcm& gcm, std::span<const int> cells, std::span<const Point2> gu_positions);

/// covered / M; throws a config Error when M == 0.
double coverage_rate(double covered, int gu_count);

/**
 * @brief Bit masks of occupied GU cells covered by each candidate cell.
 *
 * Slot s refers to cell `cells[s]` of the owning instance. Weighted popcounts
 * use bit planes of the GU multiplicities.
 */
class CoverageTable {
 public:
  CoverageTable() = default;
  CoverageTable(const Gcm& gcm, std::span<const int> cells, const GuOccupancy& occ, bool weighted);

  int words() const { return words_; }
  int slots() const { return slots_; }
  std::span<const std::uint64_t> mask(int slot) const {
    return {masks_.data() + static_cast<std::size_t>(slot) * words_, static_cast<std::size_t>(words_)};
  }
  double weigh(std::span<const std::uint64_t> covered) const;
  double weigh_and(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) const;
  double weigh_andnot(std::span<const std::uint64_t> a, std::span<const std::uint64_t> covered) const;
  double evaluate(std::span<const int> slot_list) const;

 private:
  int words_ = 0;
  int slots_ = 0;
  std::vector<std::uint64_t> masks_;
  std::vector<std::vector<std::uint64_t>> planes_;  // planes_[b] marks GU cells with bit b set in weight
};

enum class RowKind : std::uint8_t { kTotal, kPerAbs, kLink, kCover };

struct SparseEntry {
  int row = 0;
  double value = 0.0;
};

/**
 * @brief Per-period placement program  max r'x  s.t.  E x <= l,  x binary.
 *
 * Columns: |V| coverage variables C_v (occupied GU cells) followed by |U'|
 * placement variables a_u. Rows, in order:
 *   0                      sum_u a_u <= N
 *   1 .. N                 -sum_{u in U'_n} a_u <= -1
 *   1+N + vi*|U'| + ui     -C_v + z_uv a_u <= 0
 *   1+N + |V||U'| + vi     C_v - sum_u z_uv a_u <= 0
 * E is kept column-wise; every link row is present even when z_uv = 0.
 */
struct BilpInstance {
  GridSpec spec;
  int abs_count = 0;
  GuOccupancy occupied;
  std::vector<int> cells;  // U' in slot order
  bool weighted = true;

  std::vector<double> r;
  std::vector<double> l;
  std::vector<double> d;  // l / cols()
  std::vector<RowKind> row_kind;

  std::vector<int> col_start;  // CSC offsets, size cols()+1
  std::vector<SparseEntry> entries;

  CoverageTable table;

  int cov_count() const { return static_cast<int>(occupied.cells.size()); }
  int slot_count() const { return static_cast<int>(cells.size()); }
  int cols() const { return cov_count() + slot_count(); }
  int rows() const { return 1 + abs_count + slot_count() * cov_count() + cov_count(); }

  int cov_col(int vi) const { return vi; }
  int slot_col(int ui) const { return cov_count() + ui; }
  int link_row(int vi, int ui) const { return 1 + abs_count + vi * slot_count() + ui; }
  int cover_row(int vi) const { return 1 + abs_count + slot_count() * cov_count() + vi; }

  std::span<const SparseEntry> column(int k) const {
    return {entries.data() + col_start[static_cast<std::size_t>(k)],
            static_cast<std::size_t>(col_start[static_cast<std::size_t>(k) + 1] - col_start[static_cast<std::size_t>(k)])};
  }
  double column_dot(int k, std::span<const double> y) const;

  /// Slot of cell u in `cells`, or -1.
  int slot_of(int u) const;
};

BilpInstance assemble(const Gcm& gcm, const FeasibleSets& fs, std::span<const Point2> gu_positions, int abs_count,
                      bool weighted = true);

/// Matrix Market coordinate dump of E with r, l and a row/column legend in comments.
void write_instance_dump(const BilpInstance& inst, std::ostream& out);

}  // namespace gcmopt
