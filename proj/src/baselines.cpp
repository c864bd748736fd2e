#include "gcmopt/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "gcmopt/error.hpp"
#include "gcmopt/rng.hpp"

namespace gcmopt {

namespace {

using Mask = std::vector<std::uint64_t>;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Search {
  const BilpInstance& inst;
  std::vector<std::vector<int>> slots;  // per ABS
  bool bound_enabled = false;
  double full = 0.0;  // total weight, an absolute ceiling

  std::vector<Mask> covered;  // covered[n] before ABS n is placed
  std::vector<char> used;
  std::vector<int> chosen;
  std::vector<int> best_slots;
  double best = -1.0;

  Search(const BilpInstance& instance, const FeasibleSets& fs, bool bnb) : inst(instance), bound_enabled(bnb) {
    const auto n_abs = static_cast<std::size_t>(inst.abs_count);
    slots.resize(n_abs);
    for (std::size_t n = 0; n < n_abs; ++n) {
      for (int u : fs.per_abs[n]) slots[n].push_back(inst.slot_of(u));
    }
    covered.assign(n_abs + 1, Mask(static_cast<std::size_t>(inst.table.words()), 0));
    used.assign(static_cast<std::size_t>(inst.slot_count()), 0);
    chosen.assign(n_abs, -1);
    Mask all(static_cast<std::size_t>(inst.table.words()), ~std::uint64_t{0});
    full = inst.table.weigh(all);
  }

  double optimistic(std::size_t depth) const {
    const Mask& cov = covered[depth];
    double bound = inst.table.weigh(cov);
    for (std::size_t k = depth; k < slots.size(); ++k) {
      double gain = 0.0;
      for (int s : slots[k]) {
        if (!used[static_cast<std::size_t>(s)]) gain = std::max(gain, inst.table.weigh_andnot(inst.table.mask(s), cov));
      }
      bound += gain;
    }
    return bound;
  }

  void descend(std::size_t depth) {
    if (best >= full) return;
    if (depth == slots.size()) {
      const double value = inst.table.weigh(covered[depth]);
      if (value > best) {
        best = value;
        best_slots = chosen;
      }
      return;
    }
    if (bound_enabled && optimistic(depth) <= best) return;

    std::vector<int> order;
    for (int s : slots[depth]) {
      if (!used[static_cast<std::size_t>(s)]) order.push_back(s);
    }
    if (bound_enabled) {
      std::vector<double> gain(order.size());
      for (std::size_t i = 0; i < order.size(); ++i) {
        gain[i] = inst.table.weigh_andnot(inst.table.mask(order[i]), covered[depth]);
      }
      std::vector<std::size_t> idx(order.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });
      std::vector<int> sorted;
      for (std::size_t i : idx) sorted.push_back(order[i]);
      order = std::move(sorted);
    }
    for (int s : order) {
      used[static_cast<std::size_t>(s)] = 1;
      chosen[depth] = s;
      const auto m = inst.table.mask(s);
      Mask& next = covered[depth + 1];
      for (std::size_t w = 0; w < next.size(); ++w) next[w] = covered[depth][w] | m[w];
      descend(depth + 1);
      used[static_cast<std::size_t>(s)] = 0;
      if (best >= full) break;
    }
    chosen[depth] = -1;
  }
};

double squared(double v) { return v * v; }

double distance_sq(Point2 a, Point2 b) { return squared(a.x - b.x) + squared(a.y - b.y); }

}  // namespace

SolverReport exact_optimum(const BilpInstance& inst, const FeasibleSets& fs, const OracleOptions& options) {
  const auto start = Clock::now();
  if (fs.abs_count() != inst.abs_count) throw contract_error("feasible sets do not match the instance");

  double space = 1.0;
  for (const auto& set : fs.per_abs) space *= static_cast<double>(set.size());
  const bool exhaustive = space <= options.enumeration_cap;
  if (!exhaustive && !options.branch_and_bound) throw solver_error("instance too large for oracle");

  Search search(inst, fs, !exhaustive);
  if (!exhaustive) {
    // Greedy incumbent gives the bound something to prune against from the start.
    const Placement greedy = repair_selection({}, inst, fs);
    search.best = greedy.coverage;
    for (int u : greedy.cells) search.best_slots.push_back(inst.slot_of(u));
  }
  search.descend(0);
  if (search.best_slots.empty()) throw solver_error("no placement with distinct feasible cells exists");

  SolverReport report;
  report.solver = "oracle";
  for (int s : search.best_slots) report.best.cells.push_back(inst.cells[static_cast<std::size_t>(s)]);
  finalize_placement(report.best, inst);
  report.restart_coverage.push_back(report.best.coverage);
  report.duplication = 1;
  report.elapsed_seconds = seconds_since(start);
  return report;
}

std::vector<Point2> kmeans(std::span<const Point2> points, int k, std::uint64_t seed, int max_iterations,
                           double tolerance) {
  if (k < 1) throw config_error("k-means needs at least one cluster");
  if (points.size() < static_cast<std::size_t>(k)) throw config_error("k-means needs at least as many points as clusters");
  Rng rng(derive_seed(seed, "kmeans"));
  const std::size_t m = points.size();

  // k-means++ seeding.
  std::vector<Point2> centers;
  centers.push_back(points[uniform_index(rng, m)]);
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      nearest[i] = std::min(nearest[i], distance_sq(points[i], centers.back()));
      total += nearest[i];
    }
    std::size_t pick = m - 1;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (std::size_t i = 0; i < m; ++i) {
        target -= nearest[i];
        if (target < 0.0 && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, m);
    }
    centers.push_back(points[pick]);
  }

  std::vector<int> label(m, 0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    for (std::size_t i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dsq = distance_sq(points[i], centers[static_cast<std::size_t>(c)]);
        if (dsq < best) {
          best = dsq;
          label[i] = c;
        }
      }
    }
    std::vector<Point2> sums(static_cast<std::size_t>(k), Point2{0.0, 0.0});
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < m; ++i) {
      auto& s = sums[static_cast<std::size_t>(label[i])];
      s.x += points[i].x;
      s.y += points[i].y;
      ++counts[static_cast<std::size_t>(label[i])];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      Point2 next;
      if (counts[ci] == 0) {
        // Re-seed at the point farthest from its own centroid.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double dsq = distance_sq(points[i], centers[static_cast<std::size_t>(label[i])]);
          if (dsq > far_d) {
            far_d = dsq;
            far = i;
          }
        }
        next = points[far];
        label[far] = c;
      } else {
        next = {sums[ci].x / counts[ci], sums[ci].y / counts[ci]};
      }
      shift = std::max(shift, distance(next, centers[ci]));
      centers[ci] = next;
    }
    if (shift <= tolerance) break;
  }
  return centers;
}

Placement kmeans_init(const Gcm& gcm, std::span<const Point2> gu_positions, int abs_count, std::uint64_t seed) {
  const auto centroids = kmeans(gu_positions, abs_count, seed);
  const GridSpec& spec = gcm.spec();
  std::vector<char> taken(static_cast<std::size_t>(spec.abs_cells()), 0);
  Placement out;
  for (const auto& c : centroids) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int u = 0; u < spec.abs_cells(); ++u) {
      if (!gcm.abs_valid(u) || taken[static_cast<std::size_t>(u)]) continue;
      const double dsq = distance_sq(horizontal(cell_center_abs(u, spec)), c);
      if (dsq < best_d) {
        best_d = dsq;
        best = u;
      }
    }
    if (best < 0) throw solver_error("not enough valid ABS cells for the K-means placement");
    taken[static_cast<std::size_t>(best)] = 1;
    out.cells.push_back(best);
    out.positions.push_back(cell_center_abs(best, spec));
  }
  out.coverage = evaluate_placement(gcm, out.cells, gu_positions);
  return out;
}

Placement project_to_feasible(std::span<const Point2> targets, const BilpInstance& inst, const FeasibleSets& fs) {
  const int n_abs = inst.abs_count;
  if (static_cast<int>(targets.size()) != n_abs) throw contract_error("one target per ABS is required");
  std::vector<char> target_used(targets.size(), 0);
  std::vector<char> cell_used(static_cast<std::size_t>(inst.slot_count()), 0);
  std::vector<int> cells;
  bool complete = true;
  for (int n = 0; n < n_abs; ++n) {
    const Point2 here = fs.centers[static_cast<std::size_t>(n)];
    std::size_t pick = 0;
    double pick_d = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (target_used[t]) continue;
      const double dsq = distance_sq(targets[t], here);
      if (dsq < pick_d) {
        pick_d = dsq;
        pick = t;
      }
    }
    target_used[pick] = 1;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int u : fs.per_abs[static_cast<std::size_t>(n)]) {
      if (cell_used[static_cast<std::size_t>(inst.slot_of(u))]) continue;
      const double dsq = distance_sq(horizontal(cell_center_abs(u, inst.spec)), targets[pick]);
      if (dsq < best_d) {
        best_d = dsq;
        best = u;
      }
    }
    if (best < 0) {
      complete = false;
      continue;
    }
    cell_used[static_cast<std::size_t>(inst.slot_of(best))] = 1;
    cells.push_back(best);
  }
  if (!complete) return repair_selection(cells, inst, fs);
  Placement out;
  out.cells = std::move(cells);
  finalize_placement(out, inst);
  return out;
}

SolverReport ea_step(const Placement& current, const BilpInstance& inst, const FeasibleSets& fs, const EaConfig& cfg) {
  const auto start = Clock::now();
  if (cfg.rounds < 1) throw config_error("EA needs at least one mutation round");
  const int n_abs = inst.abs_count;
  if (static_cast<int>(current.cells.size()) != n_abs) throw contract_error("incumbent has the wrong ABS count");
  const double radius = cfg.mutation_radius.value_or(fs.radius);
  if (!(radius > 0.0)) throw config_error("mutation radius must be positive");

  std::vector<int> incumbent;
  std::vector<std::vector<int>> pools(static_cast<std::size_t>(n_abs));
  for (int n = 0; n < n_abs; ++n) {
    const int u0 = current.cells[static_cast<std::size_t>(n)];
    if (!fs.contains(n, u0)) throw contract_error("incumbent cell outside the ABS feasible set");
    incumbent.push_back(inst.slot_of(u0));
    const Point2 c0 = horizontal(cell_center_abs(u0, inst.spec));
    for (int u : fs.per_abs[static_cast<std::size_t>(n)]) {
      if (distance(horizontal(cell_center_abs(u, inst.spec)), c0) <= radius + 1e-9) {
        pools[static_cast<std::size_t>(n)].push_back(inst.slot_of(u));
      }
    }
  }
  {
    auto sorted = incumbent;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw contract_error("incumbent repeats a cell");
    }
  }

  Rng rng(derive_seed(cfg.seed, "ea"));
  std::vector<int> best_slots = incumbent;
  double best = inst.table.evaluate(incumbent);
  std::vector<int> mutant(static_cast<std::size_t>(n_abs));
  constexpr int kRetries = 8;
  for (int round = 0; round < cfg.rounds; ++round) {
    bool ok = true;
    for (int n = 0; n < n_abs && ok; ++n) {
      const auto& pool = pools[static_cast<std::size_t>(n)];
      const auto clash = [&](int s) {
        return std::find(mutant.begin(), mutant.begin() + n, s) != mutant.begin() + n;
      };
      int pick = -1;
      for (int attempt = 0; attempt < kRetries && pick < 0; ++attempt) {
        const int s = pool[uniform_index(rng, pool.size())];
        if (!clash(s)) pick = s;
      }
      if (pick < 0 && !clash(incumbent[static_cast<std::size_t>(n)])) pick = incumbent[static_cast<std::size_t>(n)];
      if (pick < 0) ok = false;
      mutant[static_cast<std::size_t>(n)] = pick;
    }
    if (!ok) continue;
    const double value = inst.table.evaluate(mutant);
    if (value > best) {
      best = value;
      best_slots = mutant;
    }
  }

  SolverReport report;
  report.solver = "kmeans-ea";
  for (int s : best_slots) report.best.cells.push_back(inst.cells[static_cast<std::size_t>(s)]);
  finalize_placement(report.best, inst);
  report.restart_coverage.push_back(report.best.coverage);
  report.duplication = 1;
  report.variable_visits = static_cast<std::uint64_t>(cfg.rounds);
  report.elapsed_seconds = seconds_since(start);
  return report;
}

}  // namespace gcmopt
