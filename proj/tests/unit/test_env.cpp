#include <gtest/gtest.h>

#include "gcmopt/env.hpp"
#include "gcmopt/error.hpp"
#include "gcmopt/rng.hpp"
#include "oracles.hpp"

using namespace gcmopt;

namespace {

Environment single_block(double height, double half_width = 12.5) {
  return Environment(200.0, 200.0, {{{100.0, 100.0}, half_width, height}}, 0);
}

Point3 random_point(Rng& rng, const Environment& env, double z_max) {
  return {uniform(rng, 0.0, env.d1()), uniform(rng, 0.0, env.d2()), uniform(rng, 0.0, z_max)};
}

}  // namespace

TEST(Environment, EmptyAreaHasNoBlocksAndEverythingIsVisible) {
  const auto env = generate_environment(1000.0, 1000.0, 0, 25.0, {30.0, 89.0}, 7);
  EXPECT_TRUE(env.blocks().empty());
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    EXPECT_TRUE(env.is_los(random_point(rng, env, 100.0), random_point(rng, env, 100.0)));
  }
}

TEST(Environment, DefaultCityHasRequestedBlocksWithinHeightRange) {
  const auto env = generate_environment(1000.0, 1000.0, 300, 25.0, {30.0, 89.0}, 7);
  ASSERT_EQ(env.blocks().size(), 300u);
  for (const auto& b : env.blocks()) {
    EXPECT_GE(b.height, 30.0);
    EXPECT_LE(b.height, 89.0);
    EXPECT_DOUBLE_EQ(b.half_width, 12.5);
    EXPECT_GE(b.center.x - b.half_width, 0.0);
    EXPECT_LE(b.center.x + b.half_width, 1000.0);
    EXPECT_GE(b.center.y - b.half_width, 0.0);
    EXPECT_LE(b.center.y + b.half_width, 1000.0);
  }
}

TEST(Environment, FootprintsNeverOverlap) {
  const auto env = generate_environment(500.0, 500.0, 150, 25.0, {30.0, 89.0}, 11);
  const auto& blocks = env.blocks();
  for (std::size_t a = 0; a < blocks.size(); ++a) {
    for (std::size_t b = a + 1; b < blocks.size(); ++b) {
      const bool overlap = std::abs(blocks[a].center.x - blocks[b].center.x) < 25.0 &&
                           std::abs(blocks[a].center.y - blocks[b].center.y) < 25.0;
      EXPECT_FALSE(overlap) << a << " vs " << b;
    }
  }
}

TEST(Environment, GenerationIsAPureFunctionOfItsArguments) {
  const auto a = generate_environment(1000.0, 1000.0, 300, 25.0, {30.0, 89.0}, 7);
  const auto b = generate_environment(1000.0, 1000.0, 300, 25.0, {30.0, 89.0}, 7);
  const auto c = generate_environment(1000.0, 1000.0, 300, 25.0, {30.0, 89.0}, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Environment, OverfullAreaIsRejected) {
  try {
    generate_environment(100.0, 100.0, 20, 25.0, {30.0, 89.0}, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("too dense"), std::string::npos);
  }
  // Fits by area but not by packing: 16 slots of 25 m in a 100 m square minus jitter.
  EXPECT_THROW(generate_environment(100.0, 100.0, 15, 25.0, {30.0, 89.0}, 1), Error);
}

TEST(Environment, JsonRoundTripIsExact) {
  const auto env = generate_environment(500.0, 400.0, 40, 25.0, {30.0, 89.0}, 5);
  const auto back = environment_from_json(nlohmann::json::parse(environment_to_json(env).dump()));
  EXPECT_EQ(env, back);
  auto doc = environment_to_json(env);
  doc["version"] = 99;
  EXPECT_THROW(environment_from_json(doc), Error);
}

TEST(Los, VerticalSegmentThroughTallBlockIsBlocked) {
  const auto env = single_block(60.0);
  const Point3 p{100.0, 100.0, 90.0};
  const Point3 q{100.0, 100.0, 1.0};
  const oracle::BlockIndex index(env, 25.0);
  EXPECT_FALSE(oracle::los_by_sampling(index, p, q, distance(p, q) / 1e4));
  EXPECT_FALSE(env.is_los(p, q));
}

TEST(Los, GrazingOverRoofMatchesSampling) {
  // ABS over a 30 m block; GU on the far side hugging the wall at 1 m. The line
  // passes exactly through the far top edge.
  const auto env = single_block(30.0);
  const Point3 q{112.5 + 1.0, 100.0, 1.0};
  const Point3 edge{112.5, 100.0, 30.0};
  const Point3 p{edge.x - (q.x - edge.x) * 2.0, 100.0, edge.z + (edge.z - q.z) * 2.0};
  const oracle::BlockIndex index(env, 25.0);
  const bool sampled = oracle::los_by_sampling(index, p, q, distance(p, q) / 1e4);
  EXPECT_EQ(env.is_los(p, q), sampled);
  EXPECT_TRUE(env.is_los(p, q));
}

TEST(Los, SurfaceContactIsNotBlockage) {
  const auto env = single_block(30.0);
  // Runs along the roof plane.
  EXPECT_TRUE(env.is_los({50.0, 100.0, 30.0}, {150.0, 100.0, 30.0}));
  // Runs along a wall face.
  EXPECT_TRUE(env.is_los({87.5, 50.0, 10.0}, {87.5, 150.0, 10.0}));
  // Just below the roof is blocked.
  EXPECT_FALSE(env.is_los({50.0, 100.0, 29.9}, {150.0, 100.0, 29.9}));
}

TEST(Los, SymmetricOnRandomPairs) {
  const auto env = generate_environment(500.0, 500.0, 75, 25.0, {30.0, 89.0}, 2);
  Rng rng(9);
  for (int i = 0; i < 5000; ++i) {
    const auto p = random_point(rng, env, 100.0);
    const auto q = random_point(rng, env, 100.0);
    EXPECT_EQ(env.is_los(p, q), env.is_los(q, p));
  }
}

TEST(Los, RaisingABlockNeverRestoresVisibility) {
  Rng rng(21);
  for (int trial = 0; trial < 2000; ++trial) {
    const Point3 p{uniform(rng, 0.0, 200.0), uniform(rng, 0.0, 200.0), uniform(rng, 1.0, 120.0)};
    const Point3 q{uniform(rng, 0.0, 200.0), uniform(rng, 0.0, 200.0), uniform(rng, 1.0, 120.0)};
    bool was_blocked = false;
    for (double h = 10.0; h <= 130.0; h += 10.0) {
      const bool blocked = !single_block(h).is_los(p, q);
      if (was_blocked) EXPECT_TRUE(blocked) << "height " << h;
      was_blocked = blocked;
    }
  }
}

TEST(Los, AgreesWithSamplingOracleOnRandomPairs) {
  const auto env = generate_environment(500.0, 500.0, 75, 25.0, {30.0, 89.0}, 4);
  const oracle::BlockIndex index(env, 25.0);
  Rng rng(17);
  const double spacing = 0.25;
  int disagreements = 0;
  for (int i = 0; i < 5000; ++i) {
    const auto p = random_point(rng, env, 100.0);
    const auto q = random_point(rng, env, 100.0);
    if (env.is_los(p, q) == oracle::los_by_sampling(index, p, q, spacing)) continue;
    double chord = 0.0;
    for (const auto& b : env.blocks()) chord = std::max(chord, oracle::chord_length(p, q, b));
    if (chord >= 2.0 * spacing) ++disagreements;
  }
  EXPECT_EQ(disagreements, 0);
}

TEST(Exclusion, OnlyBlocksAtLeastAsTallAsTheAbsAltitudeExcludeCells) {
  EXPECT_TRUE(single_block(95.0).is_obstructed_cell({100.0, 100.0}, 90.0));
  EXPECT_FALSE(single_block(30.0).is_obstructed_cell({100.0, 100.0}, 90.0));
  EXPECT_FALSE(single_block(95.0).is_obstructed_cell({10.0, 10.0}, 90.0));
  EXPECT_TRUE(single_block(90.0).is_obstructed_cell({112.5, 100.0}, 90.0));
}

TEST(Exclusion, GuFootprintTestIgnoresHeight) {
  EXPECT_TRUE(single_block(30.0).in_footprint({100.0, 100.0}));
  EXPECT_FALSE(single_block(30.0).in_footprint({10.0, 100.0}));
}

TEST(Exclusion, FlightPathCrossingATallBlockIsDetected) {
  const auto env = single_block(95.0);
  EXPECT_TRUE(env.path_crosses_obstruction({50.0, 100.0}, {150.0, 100.0}, 90.0));
  EXPECT_FALSE(env.path_crosses_obstruction({50.0, 50.0}, {150.0, 50.0}, 90.0));
  EXPECT_FALSE(single_block(30.0).path_crosses_obstruction({50.0, 100.0}, {150.0, 100.0}, 90.0));
}

TEST(SegmentOverlap, MatchesIndependentChordComputation) {
  Rng rng(5);
  const BuildingBlock b{{100.0, 100.0}, 12.5, 50.0};
  for (int i = 0; i < 20000; ++i) {
    const Point3 p{uniform(rng, 60.0, 140.0), uniform(rng, 60.0, 140.0), uniform(rng, 0.0, 80.0)};
    const Point3 q{uniform(rng, 60.0, 140.0), uniform(rng, 60.0, 140.0), uniform(rng, 0.0, 80.0)};
    const double len = distance(p, q);
    EXPECT_NEAR(segment_block_overlap(p, q, b) * len, oracle::chord_length(p, q, b), 1e-9);
  }
}
