#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gcmopt/baselines.hpp"
#include "gcmopt/error.hpp"
#include "oracles.hpp"

using namespace gcmopt;

namespace {

struct Built {
  oracle::TinyCase tc;
  BilpInstance inst;
};

Built tiny(Rng& rng, const oracle::TinyShape& shape = {}) {
  Built b{oracle::random_tiny_case(rng, shape), {}};
  b.inst = assemble(b.tc.gcm, b.tc.fs, b.tc.gu, b.tc.abs_count);
  return b;
}

double sse(std::span<const Point2> points, std::span<const Point2> centers) {
  double total = 0.0;
  for (const auto& p : points) {
    double best = 1e300;
    for (const auto& c : centers) best = std::min(best, (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y));
    total += best;
  }
  return total;
}

}  // namespace

TEST(ExactOptimum, SingleAbsPicksTheBestCell) {
  Rng rng(1);
  oracle::TinyShape shape;
  shape.max_abs = 1;
  shape.max_set = 8;
  for (int t = 0; t < 100; ++t) {
    const auto b = tiny(rng, shape);
    double best = -1.0;
    for (int u : b.tc.fs.per_abs[0]) best = std::max(best, oracle::coverage_of(b.tc.gcm, {u}, b.tc.gu));
    EXPECT_EQ(exact_optimum(b.inst, b.tc.fs).best.coverage, best);
  }
}

TEST(ExactOptimum, FullMapCoversEveryone) {
  Rng rng(2);
  oracle::TinyShape shape;
  shape.density = 1.0;
  for (int t = 0; t < 30; ++t) {
    const auto b = tiny(rng, shape);
    EXPECT_EQ(exact_optimum(b.inst, b.tc.fs).best.coverage, static_cast<double>(b.tc.gu.size()));
  }
}

TEST(ExactOptimum, EnumerationMatchesPlainRecursion) {
  Rng rng(3);
  oracle::TinyShape shape;
  shape.max_abs = 3;
  shape.max_set = 6;
  for (int t = 0; t < 300; ++t) {
    const auto b = tiny(rng, shape);
    const auto report = exact_optimum(b.inst, b.tc.fs);
    EXPECT_EQ(report.best.coverage, oracle::placement_optimum(b.tc.gcm, b.tc.fs, b.tc.gu));
    EXPECT_EQ(report.best.coverage, oracle::coverage_of(b.tc.gcm, report.best.cells, b.tc.gu));
    for (int n = 0; n < b.tc.abs_count; ++n) EXPECT_TRUE(b.tc.fs.contains(n, report.best.cells[static_cast<std::size_t>(n)]));
  }
}

TEST(ExactOptimum, BranchAndBoundMatchesEnumeration) {
  Rng rng(4);
  oracle::TinyShape shape;
  shape.grid = 5;
  shape.max_abs = 4;
  shape.min_set = 3;
  shape.max_set = 10;
  shape.max_gu = 12;
  OracleOptions bnb;
  bnb.enumeration_cap = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto b = tiny(rng, shape);
    EXPECT_EQ(exact_optimum(b.inst, b.tc.fs, bnb).best.coverage, exact_optimum(b.inst, b.tc.fs).best.coverage);
  }
  OracleOptions refuse;
  refuse.enumeration_cap = 0.0;
  refuse.branch_and_bound = false;
  const auto b = tiny(rng, shape);
  EXPECT_THROW(exact_optimum(b.inst, b.tc.fs, refuse), Error);
}

TEST(ExactOptimum, InvariantUnderAbsRelabeling) {
  Rng rng(5);
  oracle::TinyShape shape;
  shape.max_abs = 3;
  for (int t = 0; t < 100; ++t) {
    auto b = tiny(rng, shape);
    const double before = exact_optimum(b.inst, b.tc.fs).best.coverage;
    std::reverse(b.tc.fs.per_abs.begin(), b.tc.fs.per_abs.end());
    std::reverse(b.tc.fs.centers.begin(), b.tc.fs.centers.end());
    const auto inst = assemble(b.tc.gcm, b.tc.fs, b.tc.gu, b.tc.abs_count);
    EXPECT_EQ(exact_optimum(inst, b.tc.fs).best.coverage, before);
  }
}

TEST(Kmeans, TwoObviousClusters) {
  std::vector<Point2> pts;
  for (int i = 0; i < 10; ++i) {
    pts.push_back({10.0 + i * 0.1, 10.0});
    pts.push_back({90.0, 90.0 - i * 0.1});
  }
  auto c = kmeans(pts, 2, 7);
  std::sort(c.begin(), c.end(), [](Point2 a, Point2 b) { return a.x < b.x; });
  EXPECT_NEAR(c[0].x, 10.45, 1e-9);
  EXPECT_NEAR(c[0].y, 10.0, 1e-9);
  EXPECT_NEAR(c[1].x, 90.0, 1e-9);
  EXPECT_NEAR(c[1].y, 89.55, 1e-9);
}

TEST(Kmeans, SingleClusterIsTheMean) {
  Rng rng(6);
  std::vector<Point2> pts;
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < 37; ++i) {
    pts.push_back({uniform(rng, 0.0, 100.0), uniform(rng, 0.0, 100.0)});
    sx += pts.back().x;
    sy += pts.back().y;
  }
  const auto c = kmeans(pts, 1, 1);
  EXPECT_NEAR(c[0].x, sx / 37.0, 1e-9);
  EXPECT_NEAR(c[0].y, sy / 37.0, 1e-9);
}

TEST(Kmeans, AsManyClustersAsPointsHitsEveryPoint) {
  const std::vector<Point2> pts{{1.0, 2.0}, {50.0, 50.0}, {99.0, 3.0}};
  const auto c = kmeans(pts, 3, 3);
  EXPECT_DOUBLE_EQ(sse(pts, c), 0.0);
  EXPECT_THROW(kmeans(pts, 4, 3), Error);
  EXPECT_THROW(kmeans(pts, 0, 3), Error);
}

TEST(Kmeans, SeparatedBlobsReachTheExhaustiveTwoMeansOptimum) {
  Rng rng(8);
  int optimal = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::vector<Point2> pts;
    const int n = 3 + static_cast<int>(uniform_index(rng, 10));
    // Two well separated blobs: the optimum splits them, and seeding should find it.
    for (int i = 0; i < n; ++i) {
      const double cx = i % 2 == 0 ? 20.0 : 80.0;
      pts.push_back({cx + uniform(rng, -5.0, 5.0), 50.0 + uniform(rng, -5.0, 5.0)});
    }
    const auto c = kmeans(pts, 2, static_cast<std::uint64_t>(t));
    const double got = sse(pts, c);
    const auto best = oracle::exhaustive_two_means(pts);
    EXPECT_GE(got, best.sse - 1e-6);
    optimal += got <= best.sse + 1e-6 ? 1 : 0;
    // Lloyd fixed point: each center is the mean of the points nearest to it.
    for (std::size_t k = 0; k < c.size(); ++k) {
      double sx = 0.0, sy = 0.0;
      int cnt = 0;
      for (const auto& p : pts) {
        const std::size_t other = 1 - k;
        const double dk = (p.x - c[k].x) * (p.x - c[k].x) + (p.y - c[k].y) * (p.y - c[k].y);
        const double dother = (p.x - c[other].x) * (p.x - c[other].x) + (p.y - c[other].y) * (p.y - c[other].y);
        if (dk < dother || (dk == dother && k == 0)) {
          sx += p.x;
          sy += p.y;
          ++cnt;
        }
      }
      if (cnt > 0) {
        EXPECT_NEAR(c[k].x, sx / cnt, 1e-5);
        EXPECT_NEAR(c[k].y, sy / cnt, 1e-5);
      }
    }
  }
  EXPECT_GE(optimal, trials * 95 / 100);
}

TEST(KmeansInit, SnapsToDistinctValidCells) {
  GridSpec spec;
  spec.d1 = spec.d2 = 100.0;
  spec.k1 = spec.k2 = spec.k1p = spec.k2p = 4;
  Gcm gcm(spec, 0.1, 1.0);
  gcm.invalidate(0);
  // All GUs sit in the invalid corner cell; both centroids coincide there.
  const std::vector<Point2> gu{{5.0, 5.0}, {5.0, 5.0}, {5.0, 5.0}};
  const auto p = kmeans_init(gcm, gu, 2, 1);
  ASSERT_EQ(p.cells.size(), 2u);
  EXPECT_NE(p.cells[0], p.cells[1]);
  for (int u : p.cells) {
    EXPECT_TRUE(gcm.abs_valid(u));
    EXPECT_TRUE(u == 1 || u == 4);  // the two valid neighbours of the corner
  }
}

TEST(ProjectToFeasible, StaysInsideSetsAndDistinct) {
  Rng rng(9);
  oracle::TinyShape shape;
  shape.max_abs = 3;
  for (int t = 0; t < 200; ++t) {
    const auto b = tiny(rng, shape);
    std::vector<Point2> targets;
    for (int n = 0; n < b.tc.abs_count; ++n) targets.push_back({uniform(rng, 0.0, 100.0), uniform(rng, 0.0, 100.0)});
    const auto p = project_to_feasible(targets, b.inst, b.tc.fs);
    ASSERT_EQ(static_cast<int>(p.cells.size()), b.tc.abs_count);
    auto sorted = p.cells;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
    for (int n = 0; n < b.tc.abs_count; ++n) EXPECT_TRUE(b.tc.fs.contains(n, p.cells[static_cast<std::size_t>(n)]));
  }
}

TEST(Ea, NeverWorseThanIncumbentNorBetterThanOptimum) {
  Rng rng(10);
  oracle::TinyShape shape;
  shape.max_abs = 3;
  shape.max_set = 6;
  for (int t = 0; t < 200; ++t) {
    const auto b = tiny(rng, shape);
    const Placement start = repair_selection({}, b.inst, b.tc.fs);
    EaConfig cfg;
    cfg.rounds = 50;
    cfg.seed = static_cast<std::uint64_t>(t);
    const auto report = ea_step(start, b.inst, b.tc.fs, cfg);
    EXPECT_GE(report.best.coverage, start.coverage);
    EXPECT_LE(report.best.coverage, oracle::placement_optimum(b.tc.gcm, b.tc.fs, b.tc.gu));
    EXPECT_EQ(report.best.coverage, oracle::coverage_of(b.tc.gcm, report.best.cells, b.tc.gu));
    auto sorted = report.best.cells;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
    for (int n = 0; n < b.tc.abs_count; ++n) {
      EXPECT_TRUE(b.tc.fs.contains(n, report.best.cells[static_cast<std::size_t>(n)]));
    }
  }
}

TEST(Ea, MutationsRespectTheRadius) {
  GridSpec spec;
  spec.d1 = spec.d2 = 500.0;
  spec.k1 = spec.k2 = spec.k1p = spec.k2p = 20;
  Gcm gcm(spec, 0.1, 1.0);
  // Only a far cell covers anyone; a tight mutation radius must not reach it.
  gcm.set(flatten_abs(19, 19, spec), 0, true);
  const Environment env(500.0, 500.0, {}, 0);
  const Point2 start = horizontal(cell_center_abs(flatten_abs(2, 2, spec), spec));
  const auto fs = feasible_sets(std::vector<Point2>{start}, spec, env, 1000.0);
  const auto inst = assemble(gcm, fs, std::vector<Point2>{{10.0, 10.0}}, 1);
  Placement current;
  current.cells = {flatten_abs(2, 2, spec)};
  finalize_placement(current, inst);
  EaConfig cfg;
  cfg.rounds = 2000;
  cfg.mutation_radius = 100.0;
  EXPECT_EQ(ea_step(current, inst, fs, cfg).best.coverage, 0.0);
  cfg.mutation_radius = 1000.0;
  EXPECT_EQ(ea_step(current, inst, fs, cfg).best.coverage, 1.0);
}

TEST(Ea, DeterministicAndTiesKeepTheIncumbent) {
  Rng rng(11);
  oracle::TinyShape shape;
  shape.density = 0.0;
  const auto b = tiny(rng, shape);
  const Placement start = repair_selection({}, b.inst, b.tc.fs);
  EaConfig cfg;
  cfg.rounds = 100;
  EXPECT_EQ(ea_step(start, b.inst, b.tc.fs, cfg).best.cells, start.cells);
  EXPECT_EQ(ea_step(start, b.inst, b.tc.fs, cfg).best.cells, ea_step(start, b.inst, b.tc.fs, cfg).best.cells);
}
