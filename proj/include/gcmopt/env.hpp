#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcmopt/geometry.hpp"

namespace gcmopt {

/// Square-footprint building occupying z in [0, height].
struct BuildingBlock {
  Point2 center;
  double half_width = 0.0;
  double height = 0.0;

  /// Closed footprint test.
  bool footprint_contains(Point2 p) const {
    return std::abs(p.x - center.x) <= half_width && std::abs(p.y - center.y) <= half_width;
  }

  friend bool operator==(const BuildingBlock&, const BuildingBlock&) = default;
};

/**
 * @brief Parametric length (t in [0,1]) of segment p->q lying strictly inside the block.
 *
 * Zero when the segment misses the block or only touches its surface.
 */
double segment_block_overlap(Point3 p, Point3 q, const BuildingBlock& block);

/// Overlaps shorter than this (in segment parameter) are treated as grazing.
inline constexpr double kGrazingTolerance = 1e-12;

/**
 * @brief Rectangular area [0,d1]x[0,d2] populated with building blocks.
 *
 * Immutable after construction; all queries are const and thread-safe.
 */
class Environment {
 public:
  Environment() = default;
  Environment(double d1, double d2, std::vector<BuildingBlock> blocks, std::uint64_t seed);

  double d1() const { return d1_; }
  double d2() const { return d2_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<BuildingBlock>& blocks() const { return blocks_; }

  bool contains(Point2 xy) const { return xy.x >= 0.0 && xy.x <= d1_ && xy.y >= 0.0 && xy.y <= d2_; }

  /// True iff the open segment (p,q) does not pass through the interior of any block.
  bool is_los(Point3 p, Point3 q) const;

  /// Largest per-block overlap of segment p->q, in segment parameter units.
  double max_overlap(Point3 p, Point3 q) const;

  /// ABS exclusion at altitude abs_alt: inside a footprint of a block at least that tall.
  bool is_obstructed_cell(Point2 xy, double abs_alt) const;

  /// GU exclusion: inside any footprint regardless of height.
  bool in_footprint(Point2 xy) const;

  /// True iff the straight horizontal path a->b crosses the footprint of a block at least abs_alt tall.
  bool path_crosses_obstruction(Point2 a, Point2 b, double abs_alt) const;

  friend bool operator==(const Environment&, const Environment&) = default;

 private:
  double d1_ = 0.0;
  double d2_ = 0.0;
  std::vector<BuildingBlock> blocks_;
  std::uint64_t seed_ = 0;
};

struct HeightRange {
  double min = 30.0;
  double max = 89.0;

  friend bool operator==(const HeightRange&, const HeightRange&) = default;
};

/**
 * @brief Place `count` non-overlapping square blocks uniformly with rejection sampling.
 *
 * Deterministic in all arguments. Throws a config Error ("environment too dense")
 * when a block cannot be placed within the retry cap.
 */
Environment generate_environment(double d1, double d2, int count, double block_width, HeightRange heights,
                                 std::uint64_t seed);

nlohmann::json environment_to_json(const Environment& env);
Environment environment_from_json(const nlohmann::json& doc);

}  // namespace gcmopt
