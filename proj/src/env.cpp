#include "gcmopt/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gcmopt/error.hpp"
#include "gcmopt/rng.hpp"

namespace gcmopt {

namespace {

constexpr int kPlacementRetries = 10000;
constexpr int kEnvironmentVersion = 1;

// Clips the open parameter interval (t_lo, t_hi) against the open slab lo < p + t*d < hi.
// Returns false when the clipped interval is empty.
bool clip_open_slab(double p, double d, double lo, double hi, double& t_lo, double& t_hi) {
  if (d == 0.0) {
    return p > lo && p < hi;
  }
  double a = (lo - p) / d;
  double b = (hi - p) / d;
  if (a > b) std::swap(a, b);
  t_lo = std::max(t_lo, a);
  t_hi = std::min(t_hi, b);
  return t_lo < t_hi;
}

// Closed variant used for the 2D no-fly footprint test.
bool clip_closed_slab(double p, double d, double lo, double hi, double& t_lo, double& t_hi) {
  if (d == 0.0) {
    return p >= lo && p <= hi;
  }
  double a = (lo - p) / d;
  double b = (hi - p) / d;
  if (a > b) std::swap(a, b);
  t_lo = std::max(t_lo, a);
  t_hi = std::min(t_hi, b);
  return t_lo <= t_hi;
}

}  // namespace

double segment_block_overlap(Point3 p, Point3 q, const BuildingBlock& block) {
  double t_lo = 0.0;
  double t_hi = 1.0;
  const double hw = block.half_width;
  if (!clip_open_slab(p.x, q.x - p.x, block.center.x - hw, block.center.x + hw, t_lo, t_hi)) return 0.0;
  if (!clip_open_slab(p.y, q.y - p.y, block.center.y - hw, block.center.y + hw, t_lo, t_hi)) return 0.0;
  if (!clip_open_slab(p.z, q.z - p.z, 0.0, block.height, t_lo, t_hi)) return 0.0;
  return t_hi - t_lo;
}

Environment::Environment(double d1, double d2, std::vector<BuildingBlock> blocks, std::uint64_t seed)
    : d1_(d1), d2_(d2), blocks_(std::move(blocks)), seed_(seed) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw config_error("environment area must be positive");
  for (const auto& b : blocks_) {
    if (!(b.height > 0.0) || !(b.half_width > 0.0)) {
      throw config_error("building block needs positive height and half width");
    }
    if (b.center.x - b.half_width < 0.0 || b.center.x + b.half_width > d1 || b.center.y - b.half_width < 0.0 ||
        b.center.y + b.half_width > d2) {
      throw config_error("building block footprint leaves the area");
    }
  }
}

bool Environment::is_los(Point3 p, Point3 q) const { return max_overlap(p, q) <= kGrazingTolerance; }

double Environment::max_overlap(Point3 p, Point3 q) const {
  const double x_lo = std::min(p.x, q.x);
  const double x_hi = std::max(p.x, q.x);
  const double y_lo = std::min(p.y, q.y);
  const double y_hi = std::max(p.y, q.y);
  const double z_lo = std::min(p.z, q.z);
  double worst = 0.0;
  for (const auto& b : blocks_) {
    if (b.height <= z_lo) continue;
    if (b.center.x + b.half_width < x_lo || b.center.x - b.half_width > x_hi) continue;
    if (b.center.y + b.half_width < y_lo || b.center.y - b.half_width > y_hi) continue;
    worst = std::max(worst, segment_block_overlap(p, q, b));
  }
  return worst;
}

bool Environment::is_obstructed_cell(Point2 xy, double abs_alt) const {
  return std::any_of(blocks_.begin(), blocks_.end(),
                     [&](const BuildingBlock& b) { return b.height >= abs_alt && b.footprint_contains(xy); });
}

bool Environment::in_footprint(Point2 xy) const {
  return std::any_of(blocks_.begin(), blocks_.end(),
                     [&](const BuildingBlock& b) { return b.footprint_contains(xy); });
}

bool Environment::path_crosses_obstruction(Point2 a, Point2 b, double abs_alt) const {
  for (const auto& blk : blocks_) {
    if (blk.height < abs_alt) continue;
    double t_lo = 0.0;
    double t_hi = 1.0;
    const double hw = blk.half_width;
    if (clip_closed_slab(a.x, b.x - a.x, blk.center.x - hw, blk.center.x + hw, t_lo, t_hi) &&
        clip_closed_slab(a.y, b.y - a.y, blk.center.y - hw, blk.center.y + hw, t_lo, t_hi)) {
      return true;
    }
  }
  return false;
}

Environment generate_environment(double d1, double d2, int count, double block_width, HeightRange heights,
                                 std::uint64_t seed) {
  if (count < 0) throw config_error("block count must be non-negative");
  if (count > 0) {
    if (!(block_width > 0.0)) throw config_error("block width must be positive");
    if (!(heights.min > 0.0) || heights.max < heights.min) throw config_error("invalid block height range");
    if (count * block_width * block_width >= d1 * d2) throw config_error("environment too dense");
    if (block_width > d1 || block_width > d2) throw config_error("block wider than the area");
  }

  Rng rng(seed);
  const double hw = block_width / 2.0;

  std::vector<BuildingBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(count));
  for (int l = 0; l < count; ++l) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      const double x = uniform(rng, hw, d1 - hw);
      const Point2 c{x, uniform(rng, hw, d2 - hw)};
      // Touching footprints are allowed; overlapping interiors are not.
      const bool overlaps = std::any_of(blocks.begin(), blocks.end(), [&](const BuildingBlock& b) {
        return std::abs(b.center.x - c.x) < block_width && std::abs(b.center.y - c.y) < block_width;
      });
      if (!overlaps) {
        blocks.push_back({c, hw, 0.0});
        placed = true;
      }
    }
    if (!placed) {
      throw config_error("environment too dense: could not place block " + std::to_string(l + 1) + " of " +
                         std::to_string(count));
    }
  }
  // Heights drawn after placement so the footprint layout does not depend on the height range.
  for (auto& b : blocks) b.height = uniform(rng, heights.min, heights.max);
  return Environment(d1, d2, std::move(blocks), seed);
}

nlohmann::json environment_to_json(const Environment& env) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : env.blocks()) {
    blocks.push_back({{"x", b.center.x}, {"y", b.center.y}, {"half_width", b.half_width}, {"height", b.height}});
  }
  return {{"format", "gcmopt-environment"},
          {"version", kEnvironmentVersion},
          {"area", {{"d1", env.d1()}, {"d2", env.d2()}}},
          {"seed", env.seed()},
          {"blocks", std::move(blocks)}};
}

Environment environment_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "gcmopt-environment") throw config_error("not an environment document");
    if (doc.at("version").get<int>() != kEnvironmentVersion) throw config_error("unsupported environment version");
    std::vector<BuildingBlock> blocks;
    for (const auto& b : doc.at("blocks")) {
      blocks.push_back({{b.at("x").get<double>(), b.at("y").get<double>()},
                        b.at("half_width").get<double>(),
                        b.at("height").get<double>()});
    }
    return Environment(doc.at("area").at("d1").get<double>(), doc.at("area").at("d2").get<double>(),
                       std::move(blocks), doc.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("malformed environment document: ") + e.what());
  }
}

}  // namespace gcmopt
