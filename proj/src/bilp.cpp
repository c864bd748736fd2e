#include "gcmopt/bilp.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <ostream>
#include <string>

#include "gcmopt/error.hpp"

namespace gcmopt {

bool FeasibleSets::contains(int n, int u) const {
  const auto& set = per_abs[static_cast<std::size_t>(n)];
  return std::binary_search(set.begin(), set.end(), u);
}

FeasibleSets feasible_sets(std::span<const Point2> current, const GridSpec& spec, const Environment& env,
                           double radius) {
  if (!(radius > 0.0)) throw config_error("movement radius must be positive");
  FeasibleSets fs;
  fs.radius = radius;
  fs.centers.assign(current.begin(), current.end());
  fs.per_abs.resize(current.size());

  std::vector<char> valid(static_cast<std::size_t>(spec.abs_cells()));
  for (int u = 0; u < spec.abs_cells(); ++u) {
    valid[static_cast<std::size_t>(u)] = !env.is_obstructed_cell(horizontal(cell_center_abs(u, spec)), spec.abs_alt);
  }

  constexpr double kSlack = 1e-9;
  for (std::size_t n = 0; n < current.size(); ++n) {
    auto& set = fs.per_abs[n];
    for (int u = 0; u < spec.abs_cells(); ++u) {
      if (!valid[static_cast<std::size_t>(u)]) continue;
      const Point2 c = horizontal(cell_center_abs(u, spec));
      if (distance(c, current[n]) > radius + kSlack) continue;
      if (env.path_crosses_obstruction(current[n], c, spec.abs_alt)) continue;
      set.push_back(u);
    }
    if (set.empty()) throw solver_error("ABS " + std::to_string(n) + " has no reachable cell");
    fs.all.insert(fs.all.end(), set.begin(), set.end());
  }
  std::sort(fs.all.begin(), fs.all.end());
  fs.all.erase(std::unique(fs.all.begin(), fs.all.end()), fs.all.end());
  return fs;
}

GuOccupancy occupancy(std::span<const Point2> gu_positions, const GridSpec& spec) {
  std::map<int, int> counts;
  for (const auto& q : gu_positions) ++counts[gu_cell_of(q, spec)];
  GuOccupancy occ;
  for (const auto& [v, w] : counts) {
    occ.cells.push_back(v);
    occ.weights.push_back(w);
  }
  occ.total = static_cast<int>(gu_positions.size());
  return occ;
}

double evaluate_placement(const Gcm& gcm, std::span<const int> cells, std::span<const Point2> gu_positions) {
  const GuOccupancy occ = occupancy(gu_positions, gcm.spec());
  double covered = 0.0;
  for (std::size_t i = 0; i < occ.cells.size(); ++i) {
    const int v = occ.cells[i];
    const bool hit = std::any_of(cells.begin(), cells.end(), [&](int u) { return gcm.z(u, v); });
    if (hit) covered += occ.weights[i];
  }
  return covered;
}

double coverage_rate(double covered, int gu_count) {
  if (gu_count <= 0) throw config_error("coverage rate needs at least one GU");
  return covered / gu_count;
}

CoverageTable::CoverageTable(const Gcm& gcm, std::span<const int> cells, const GuOccupancy& occ, bool weighted)
    : words_((static_cast<int>(occ.cells.size()) + 63) / 64), slots_(static_cast<int>(cells.size())) {
  masks_.assign(static_cast<std::size_t>(slots_) * static_cast<std::size_t>(std::max(words_, 0)), 0);
  for (int s = 0; s < slots_; ++s) {
    const int u = cells[static_cast<std::size_t>(s)];
    for (std::size_t vi = 0; vi < occ.cells.size(); ++vi) {
      if (gcm.z(u, occ.cells[vi])) {
        masks_[static_cast<std::size_t>(s) * words_ + (vi >> 6)] |= std::uint64_t{1} << (vi & 63);
      }
    }
  }
  int max_weight = 1;
  if (weighted) {
    for (int w : occ.weights) max_weight = std::max(max_weight, w);
  }
  const int n_planes = std::bit_width(static_cast<unsigned>(max_weight));
  planes_.assign(static_cast<std::size_t>(n_planes), std::vector<std::uint64_t>(static_cast<std::size_t>(words_), 0));
  for (std::size_t vi = 0; vi < occ.cells.size(); ++vi) {
    const unsigned w = weighted ? static_cast<unsigned>(occ.weights[vi]) : 1U;
    for (int b = 0; b < n_planes; ++b) {
      if ((w >> b) & 1U) planes_[static_cast<std::size_t>(b)][vi >> 6] |= std::uint64_t{1} << (vi & 63);
    }
  }
}

double CoverageTable::weigh(std::span<const std::uint64_t> covered) const {
  long total = 0;
  for (std::size_t b = 0; b < planes_.size(); ++b) {
    long count = 0;
    for (int w = 0; w < words_; ++w) count += std::popcount(covered[static_cast<std::size_t>(w)] & planes_[b][static_cast<std::size_t>(w)]);
    total += count << b;
  }
  return static_cast<double>(total);
}

double CoverageTable::weigh_and(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) const {
  long total = 0;
  for (std::size_t p = 0; p < planes_.size(); ++p) {
    long count = 0;
    for (int w = 0; w < words_; ++w) {
      const auto i = static_cast<std::size_t>(w);
      count += std::popcount(a[i] & b[i] & planes_[p][i]);
    }
    total += count << p;
  }
  return static_cast<double>(total);
}

double CoverageTable::weigh_andnot(std::span<const std::uint64_t> a, std::span<const std::uint64_t> covered) const {
  long total = 0;
  for (std::size_t p = 0; p < planes_.size(); ++p) {
    long count = 0;
    for (int w = 0; w < words_; ++w) {
      const auto i = static_cast<std::size_t>(w);
      count += std::popcount(a[i] & ~covered[i] & planes_[p][i]);
    }
    total += count << p;
  }
  return static_cast<double>(total);
}

double CoverageTable::evaluate(std::span<const int> slot_list) const {
  std::vector<std::uint64_t> acc(static_cast<std::size_t>(words_), 0);
  for (int s : slot_list) {
    const auto m = mask(s);
    for (int w = 0; w < words_; ++w) acc[static_cast<std::size_t>(w)] |= m[static_cast<std::size_t>(w)];
  }
  return weigh(acc);
}

double BilpInstance::column_dot(int k, std::span<const double> y) const {
  double s = 0.0;
  for (const auto& e : column(k)) s += e.value * y[static_cast<std::size_t>(e.row)];
  return s;
}

int BilpInstance::slot_of(int u) const {
  const auto it = std::lower_bound(cells.begin(), cells.end(), u);
  if (it == cells.end() || *it != u) return -1;
  return static_cast<int>(it - cells.begin());
}

BilpInstance assemble(const Gcm& gcm, const FeasibleSets& fs, std::span<const Point2> gu_positions, int abs_count,
                      bool weighted) {
  if (abs_count < 1) throw config_error("at least one ABS is required");
  if (fs.abs_count() != abs_count) throw config_error("feasible sets do not match the ABS count");
  if (gu_positions.empty()) throw config_error("at least one GU is required");
  const GridSpec& spec = gcm.spec();
  for (const auto& q : gu_positions) {
    if (q.x < 0.0 || q.x > spec.d1 || q.y < 0.0 || q.y > spec.d2) throw config_error("GU outside the area");
  }
  for (int u : fs.all) {
    if (u < 0 || u >= spec.abs_cells()) throw config_error("feasible cell outside the ABS grid");
  }

  BilpInstance inst;
  inst.spec = spec;
  inst.abs_count = abs_count;
  inst.weighted = weighted;
  inst.occupied = occupancy(gu_positions, spec);
  inst.cells = fs.all;

  const int nv = inst.cov_count();
  const int nu = inst.slot_count();
  const int n_rows = inst.rows();
  const int n_cols = inst.cols();

  inst.r.assign(static_cast<std::size_t>(n_cols), 0.0);
  for (int vi = 0; vi < nv; ++vi) {
    inst.r[static_cast<std::size_t>(vi)] = weighted ? inst.occupied.weights[static_cast<std::size_t>(vi)] : 1.0;
  }

  inst.l.assign(static_cast<std::size_t>(n_rows), 0.0);
  inst.l[0] = abs_count;
  for (int n = 0; n < abs_count; ++n) inst.l[static_cast<std::size_t>(1 + n)] = -1.0;
  inst.d.resize(inst.l.size());
  for (std::size_t i = 0; i < inst.l.size(); ++i) inst.d[i] = inst.l[i] / n_cols;

  inst.row_kind.assign(static_cast<std::size_t>(n_rows), RowKind::kLink);
  inst.row_kind[0] = RowKind::kTotal;
  for (int n = 0; n < abs_count; ++n) inst.row_kind[static_cast<std::size_t>(1 + n)] = RowKind::kPerAbs;
  for (int vi = 0; vi < nv; ++vi) inst.row_kind[static_cast<std::size_t>(inst.cover_row(vi))] = RowKind::kCover;

  inst.col_start.reserve(static_cast<std::size_t>(n_cols) + 1);
  inst.col_start.push_back(0);
  // Coverage columns: -1 on each of the v's link rows, +1 on its cover row.
  for (int vi = 0; vi < nv; ++vi) {
    for (int ui = 0; ui < nu; ++ui) inst.entries.push_back({inst.link_row(vi, ui), -1.0});
    inst.entries.push_back({inst.cover_row(vi), 1.0});
    inst.col_start.push_back(static_cast<int>(inst.entries.size()));
  }
  // Placement columns: total row, per-ABS membership rows, link and cover rows where z_uv = 1.
  for (int ui = 0; ui < nu; ++ui) {
    const int u = inst.cells[static_cast<std::size_t>(ui)];
    inst.entries.push_back({0, 1.0});
    for (int n = 0; n < abs_count; ++n) {
      if (fs.contains(n, u)) inst.entries.push_back({1 + n, -1.0});
    }
    for (int vi = 0; vi < nv; ++vi) {
      if (gcm.z(u, inst.occupied.cells[static_cast<std::size_t>(vi)])) inst.entries.push_back({inst.link_row(vi, ui), 1.0});
    }
    for (int vi = 0; vi < nv; ++vi) {
      if (gcm.z(u, inst.occupied.cells[static_cast<std::size_t>(vi)])) inst.entries.push_back({inst.cover_row(vi), -1.0});
    }
    inst.col_start.push_back(static_cast<int>(inst.entries.size()));
  }

  inst.table = CoverageTable(gcm, inst.cells, inst.occupied, weighted);
  return inst;
}

void write_instance_dump(const BilpInstance& inst, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << "% placement program: maximize r'x subject to E x <= l, x binary\n";
  out << "% N=" << inst.abs_count << " V=" << inst.cov_count() << " U'=" << inst.slot_count() << '\n';
  for (int vi = 0; vi < inst.cov_count(); ++vi) {
    out << "% col " << inst.cov_col(vi) + 1 << " C gu_cell=" << inst.occupied.cells[static_cast<std::size_t>(vi)]
        << " r=" << inst.r[static_cast<std::size_t>(vi)] << '\n';
  }
  for (int ui = 0; ui < inst.slot_count(); ++ui) {
    out << "% col " << inst.slot_col(ui) + 1 << " a abs_cell=" << inst.cells[static_cast<std::size_t>(ui)] << " r=0\n";
  }
  static constexpr const char* kKindNames[] = {"total", "per_abs", "link", "cover"};
  for (int i = 0; i < inst.rows(); ++i) {
    out << "% row " << i + 1 << ' ' << kKindNames[static_cast<int>(inst.row_kind[static_cast<std::size_t>(i)])]
        << " l=" << inst.l[static_cast<std::size_t>(i)] << '\n';
  }
  out << inst.rows() << ' ' << inst.cols() << ' ' << inst.entries.size() << '\n';
  for (int k = 0; k < inst.cols(); ++k) {
    for (const auto& e : inst.column(k)) out << e.row + 1 << ' ' << k + 1 << ' ' << e.value << '\n';
  }
}

}  // namespace gcmopt
