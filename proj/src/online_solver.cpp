#include "gcmopt/online_solver.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <tuple>

#include "gcmopt/error.hpp"
#include "gcmopt/rng.hpp"

namespace gcmopt {

namespace {

using Mask = std::vector<std::uint64_t>;

void or_into(Mask& acc, std::span<const std::uint64_t> m) {
  for (std::size_t w = 0; w < acc.size(); ++w) acc[w] |= m[w];
}

// Kuhn augmenting path: try to give ABS n a slot from its adjacency list.
bool augment(int n, const std::vector<std::vector<int>>& adjacency, std::vector<int>& owner_of_slot,
             std::vector<int>& slot_of_abs, std::vector<char>& visited) {
  for (int s : adjacency[static_cast<std::size_t>(n)]) {
    if (visited[static_cast<std::size_t>(s)]) continue;
    visited[static_cast<std::size_t>(s)] = 1;
    const int owner = owner_of_slot[static_cast<std::size_t>(s)];
    if (owner < 0 || augment(owner, adjacency, owner_of_slot, slot_of_abs, visited)) {
      owner_of_slot[static_cast<std::size_t>(s)] = n;
      slot_of_abs[static_cast<std::size_t>(n)] = s;
      return true;
    }
  }
  return false;
}

// Drops slots from `selected` until `keep` remain, always removing the slot whose
// removal loses the least covered weight (ties: higher slot first).
void prune_least_marginal(std::vector<int>& selected, std::size_t keep, const CoverageTable& table) {
  if (selected.size() <= keep) return;
  const int words = table.words();
  std::vector<int> count(static_cast<std::size_t>(words) * 64, 0);
  for (int s : selected) {
    const auto m = table.mask(s);
    for (int w = 0; w < words; ++w) {
      for (std::uint64_t bits = m[static_cast<std::size_t>(w)]; bits != 0; bits &= bits - 1) {
        ++count[static_cast<std::size_t>(w * 64 + std::countr_zero(bits))];
      }
    }
  }
  Mask once(static_cast<std::size_t>(words), 0);
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (count[b] == 1) once[b >> 6] |= std::uint64_t{1} << (b & 63);
  }

  // Marginals only grow as other slots leave, so stale heap keys are lower bounds.
  using Entry = std::tuple<double, int, int>;  // marginal, -slot, slot
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (int s : selected) heap.emplace(table.weigh_and(table.mask(s), once), -s, s);

  std::vector<char> removed_flag(static_cast<std::size_t>(table.slots()), 0);
  std::size_t remaining = selected.size();
  while (remaining > keep) {
    const auto [stale, neg, s] = heap.top();
    heap.pop();
    const double fresh = table.weigh_and(table.mask(s), once);
    if (fresh != stale) {
      heap.emplace(fresh, neg, s);
      continue;
    }
    removed_flag[static_cast<std::size_t>(s)] = 1;
    --remaining;
    const auto m = table.mask(s);
    for (int w = 0; w < words; ++w) {
      for (std::uint64_t bits = m[static_cast<std::size_t>(w)]; bits != 0; bits &= bits - 1) {
        const int b = w * 64 + std::countr_zero(bits);
        const int c = --count[static_cast<std::size_t>(b)];
        const std::uint64_t bit = std::uint64_t{1} << (b & 63);
        if (c == 1) {
          once[static_cast<std::size_t>(w)] |= bit;
        } else {
          once[static_cast<std::size_t>(w)] &= ~bit;
        }
      }
    }
  }
  std::erase_if(selected, [&](int s) { return removed_flag[static_cast<std::size_t>(s)] != 0; });
}

// Min-cost perfect assignment of rows to columns on a square matrix (Hungarian method,
// potentials form). Returns the column chosen for each row.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) col_of_row[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return col_of_row;
}

}  // namespace

double total_movement(std::span<const int> cells, const FeasibleSets& fs, const GridSpec& spec) {
  double total = 0.0;
  for (std::size_t n = 0; n < cells.size(); ++n) {
    total += distance(horizontal(cell_center_abs(cells[n], spec)), fs.centers[n]);
  }
  return total;
}

void assign_min_movement(std::vector<int>& cells, const FeasibleSets& fs, const GridSpec& spec) {
  const std::size_t n = cells.size();
  if (n < 2) return;
  // Infeasible pairs get a cost no feasible assignment can reach.
  double big = 1.0;
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = 0; c < n; ++c) {
      cost[a][c] = distance(horizontal(cell_center_abs(cells[c], spec)), fs.centers[a]);
      big += cost[a][c];
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = 0; c < n; ++c) {
      if (!fs.contains(static_cast<int>(a), cells[c])) cost[a][c] = big;
    }
  }
  const auto col = min_cost_assignment(cost);
  std::vector<int> out(n);
  for (std::size_t a = 0; a < n; ++a) out[a] = cells[static_cast<std::size_t>(col[a])];
  // Keep the given order unless the new one is feasible and strictly shorter.
  for (std::size_t a = 0; a < n; ++a) {
    if (!fs.contains(static_cast<int>(a), out[a])) return;
  }
  if (total_movement(out, fs, spec) < total_movement(cells, fs, spec)) cells = std::move(out);
}

nlohmann::json report_to_json(const SolverReport& report) {
  nlohmann::json positions = nlohmann::json::array();
  for (const auto& p : report.best.positions) positions.push_back({p.x, p.y, p.z});
  return {{"solver", report.solver},
          {"placement", {{"cells", report.best.cells}, {"positions", positions}}},
          {"coverage", report.best.coverage},
          {"restart_coverage", report.restart_coverage},
          {"gap_bound", report.gap_bound},
          {"step_size", report.step_size},
          {"duplication", report.duplication},
          {"variable_visits", report.variable_visits},
          {"wall_seconds", report.elapsed_seconds}};
}

double default_step_size(const BilpInstance& inst) { return 1.0 / std::sqrt(static_cast<double>(inst.cols())); }

void finalize_placement(Placement& placement, const BilpInstance& inst) {
  placement.positions.clear();
  std::vector<int> slots;
  for (int u : placement.cells) {
    placement.positions.push_back(cell_center_abs(u, inst.spec));
    const int s = inst.slot_of(u);
    if (s < 0) throw contract_error("placement cell outside the feasible union");
    slots.push_back(s);
  }
  placement.coverage = inst.table.evaluate(slots);
}

Placement repair_selection(std::span<const int> selected_cells, const BilpInstance& inst, const FeasibleSets& fs) {
  const int n_abs = inst.abs_count;
  const CoverageTable& table = inst.table;

  std::vector<int> selected;
  for (int u : selected_cells) {
    const int s = inst.slot_of(u);
    if (s < 0) throw contract_error("selected cell outside the feasible union");
    selected.push_back(s);
  }
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());

  prune_least_marginal(selected, static_cast<std::size_t>(n_abs), table);

  // Match surviving cells to ABSs.
  std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(n_abs));
  for (int n = 0; n < n_abs; ++n) {
    for (int s : selected) {
      if (fs.contains(n, inst.cells[static_cast<std::size_t>(s)])) adjacency[static_cast<std::size_t>(n)].push_back(s);
    }
  }
  std::vector<int> owner(static_cast<std::size_t>(inst.slot_count()), -1);
  std::vector<int> assigned(static_cast<std::size_t>(n_abs), -1);
  for (int n = 0; n < n_abs; ++n) {
    std::vector<char> visited(static_cast<std::size_t>(inst.slot_count()), 0);
    augment(n, adjacency, owner, assigned, visited);
  }

  // Unmatched ABSs take their best unused reachable cell.
  Mask covered(static_cast<std::size_t>(table.words()), 0);
  for (int n = 0; n < n_abs; ++n) {
    if (assigned[static_cast<std::size_t>(n)] >= 0) or_into(covered, table.mask(assigned[static_cast<std::size_t>(n)]));
  }
  for (int n = 0; n < n_abs; ++n) {
    if (assigned[static_cast<std::size_t>(n)] >= 0) continue;
    int best = -1;
    double best_gain = -1.0;
    double best_dist = 0.0;
    for (int u : fs.per_abs[static_cast<std::size_t>(n)]) {
      const int s = inst.slot_of(u);
      if (owner[static_cast<std::size_t>(s)] >= 0) continue;
      const double gain = table.weigh_andnot(table.mask(s), covered);
      const double dist = distance(horizontal(cell_center_abs(u, inst.spec)), fs.centers[static_cast<std::size_t>(n)]);
      if (gain > best_gain || (gain == best_gain && dist < best_dist)) {
        best = s;
        best_gain = gain;
        best_dist = dist;
      }
    }
    if (best < 0) {
      // Every reachable cell is taken: re-match over the full reachable sets.
      std::vector<std::vector<int>> full(static_cast<std::size_t>(n_abs));
      for (int k = 0; k < n_abs; ++k) {
        for (int u : fs.per_abs[static_cast<std::size_t>(k)]) full[static_cast<std::size_t>(k)].push_back(inst.slot_of(u));
      }
      std::vector<char> visited(static_cast<std::size_t>(inst.slot_count()), 0);
      if (!augment(n, full, owner, assigned, visited)) {
        throw solver_error("no feasible placement: ABS " + std::to_string(n) + " cannot get a distinct cell");
      }
      std::fill(covered.begin(), covered.end(), 0);
      for (int k = 0; k < n_abs; ++k) {
        if (assigned[static_cast<std::size_t>(k)] >= 0) or_into(covered, table.mask(assigned[static_cast<std::size_t>(k)]));
      }
      continue;
    }
    owner[static_cast<std::size_t>(best)] = n;
    assigned[static_cast<std::size_t>(n)] = best;
    or_into(covered, table.mask(best));
  }

  Placement out;
  for (int n = 0; n < n_abs; ++n) out.cells.push_back(inst.cells[static_cast<std::size_t>(assigned[static_cast<std::size_t>(n)])]);
  assign_min_movement(out.cells, fs, inst.spec);
  finalize_placement(out, inst);
  return out;
}

Placement decode_and_repair(std::span<const std::uint8_t> x, const BilpInstance& inst, const FeasibleSets& fs) {
  if (static_cast<int>(x.size()) != inst.cols()) throw contract_error("primal vector length does not match instance");
  std::vector<int> selected;
  for (int ui = 0; ui < inst.slot_count(); ++ui) {
    if (x[static_cast<std::size_t>(inst.slot_col(ui))] != 0) selected.push_back(inst.cells[static_cast<std::size_t>(ui)]);
  }
  return repair_selection(selected, inst, fs);
}

double dual_objective(const BilpInstance& inst, std::span<const double> y) {
  double value = 0.0;
  for (std::size_t i = 0; i < inst.l.size(); ++i) value += inst.l[i] * y[i];
  for (int k = 0; k < inst.cols(); ++k) value += std::max(0.0, inst.r[static_cast<std::size_t>(k)] - inst.column_dot(k, y));
  return value;
}

double gap_bound(const BilpInstance& inst, int duplication) {
  double e_max = 0.0;
  for (const auto& e : inst.entries) e_max = std::max(e_max, std::abs(e.value));
  double d_max = 0.0;
  for (double di : inst.d) d_max = std::max(d_max, std::abs(di));
  const double spread = e_max + d_max;
  return static_cast<double>(inst.rows()) * spread * spread * std::sqrt(static_cast<double>(inst.cols())) /
         std::sqrt(static_cast<double>(duplication));
}

SolverReport solve_online(const BilpInstance& inst, const FeasibleSets& fs, const OnlineSolverOptions& options) {
  if (options.duplication < 1) throw config_error("duplication factor must be at least 1");
  const double alpha = options.step_size.value_or(default_step_size(inst));
  if (!(alpha > 0.0)) throw config_error("step size must be positive");

  const auto start = std::chrono::steady_clock::now();
  const int n_cols = inst.cols();
  const auto n_rows = static_cast<std::size_t>(inst.rows());

  std::vector<int> d_rows;
  std::vector<char> is_d_row(n_rows, 0);
  for (std::size_t i = 0; i < inst.d.size(); ++i) {
    if (inst.d[i] != 0.0) {
      d_rows.push_back(static_cast<int>(i));
      is_d_row[i] = 1;
    }
  }

  SolverReport report;
  report.solver = "online";
  report.step_size = alpha;
  report.duplication = options.duplication;
  report.gap_bound = gap_bound(inst, options.duplication);

  std::vector<double> y(n_rows);
  std::vector<std::uint8_t> x(static_cast<std::size_t>(n_cols));
  std::vector<int> order(static_cast<std::size_t>(n_cols));
  bool have_best = false;
  double best_movement = 0.0;
  if (!options.incumbent.empty()) {
    if (static_cast<int>(options.incumbent.size()) != inst.abs_count) throw contract_error("incumbent has the wrong ABS count");
    for (int n = 0; n < inst.abs_count; ++n) {
      if (!fs.contains(n, options.incumbent[static_cast<std::size_t>(n)])) {
        throw contract_error("incumbent cell outside the ABS feasible set");
      }
    }
    report.best.cells = options.incumbent;
    finalize_placement(report.best, inst);
    best_movement = total_movement(report.best.cells, fs, inst.spec);
    have_best = true;
  }

  for (int restart = 0; restart < options.duplication; ++restart) {
    Rng rng(derive_seed(options.seed, "online-restart", static_cast<std::uint64_t>(restart)));
    std::iota(order.begin(), order.end(), 0);
    shuffle(std::span<int>(order), rng);
    if (restart == 0 || options.reset_dual) std::fill(y.begin(), y.end(), 0.0);
    std::fill(x.begin(), x.end(), 0);

    for (int t : order) {
      const double r_t = inst.r[static_cast<std::size_t>(t)];
      const double price = inst.column_dot(t, y);
      const bool take = r_t > price || (r_t == price && options.tie == TieRule::kOne);
      x[static_cast<std::size_t>(t)] = take ? 1 : 0;

      // Rows carrying a d term are clipped after the d step, the rest right away.
      if (take) {
        for (const auto& e : inst.column(t)) {
          auto& yi = y[static_cast<std::size_t>(e.row)];
          yi += alpha * e.value;
          if (!is_d_row[static_cast<std::size_t>(e.row)]) yi = std::max(yi, 0.0);
        }
      }
      for (int i : d_rows) {
        auto& yi = y[static_cast<std::size_t>(i)];
        yi = std::max(yi - alpha * inst.d[static_cast<std::size_t>(i)], 0.0);
      }
      ++report.variable_visits;
      if (options.on_iterate) options.on_iterate(restart, y);
    }
    if (options.on_restart) options.on_restart(restart, x);

    Placement candidate = decode_and_repair(x, inst, fs);
    report.restart_coverage.push_back(candidate.coverage);
    const double movement = total_movement(candidate.cells, fs, inst.spec);
    if (!have_best || candidate.coverage > report.best.coverage ||
        (candidate.coverage == report.best.coverage && movement < best_movement)) {
      best_movement = movement;
      report.best = std::move(candidate);
      have_best = true;
    }
  }
  report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace gcmopt
