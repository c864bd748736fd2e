#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "gcmopt/channel.hpp"
#include "gcmopt/env.hpp"
#include "gcmopt/geometry.hpp"

namespace gcmopt {

/**
 * @brief Discretization of the ABS plane (k1 x k2 cells at abs_alt) and the GU plane (k1p x k2p).
 *
 * Cell (i, j) is zero-based here; its flattened index is i * k2 + j.
 */
struct GridSpec {
  double d1 = 1000.0;
  double d2 = 1000.0;
  int k1 = 40;
  int k2 = 40;
  int k1p = 40;
  int k2p = 40;
  double abs_alt = 90.0;

  double abs_cell_x() const { return d1 / k1; }
  double abs_cell_y() const { return d2 / k2; }
  double gu_cell_x() const { return d1 / k1p; }
  double gu_cell_y() const { return d2 / k2p; }
  int abs_cells() const { return k1 * k2; }
  int gu_cells() const { return k1p * k2p; }

  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Throw std::out_of_range for indices outside the grid.
int flatten_abs(int i, int j, const GridSpec& spec);
int flatten_gu(int i, int j, const GridSpec& spec);
std::pair<int, int> unflatten_abs(int u, const GridSpec& spec);
std::pair<int, int> unflatten_gu(int v, const GridSpec& spec);

/// ((i + 1/2) a1, (j + 1/2) a2, H).
Point3 cell_center_abs(int u, const GridSpec& spec);
/// GU cell center on the ground plane (z = 0).
Point3 cell_center_gu(int v, const GridSpec& spec);

/// Cell containing a horizontal position (boundary points map to the lower cell, clamped to the grid).
int abs_cell_of(Point2 xy, const GridSpec& spec);
int gu_cell_of(Point2 xy, const GridSpec& spec);

/**
 * @brief Binary connectivity matrix Z over (ABS cell, GU cell) pairs plus ABS-cell validity.
 *
 * Rows are stored as 64-bit words so coverage unions are word-wise ORs.
 * Invalid ABS cells always carry an all-zero row.
 */
class Gcm {
 public:
  Gcm() = default;
  Gcm(const GridSpec& spec, double outage_threshold, double gu_alt);

  const GridSpec& spec() const { return spec_; }
  double outage_threshold() const { return outage_threshold_; }
  double gu_alt() const { return gu_alt_; }

  int row_words() const { return row_words_; }

  bool z(int u, int v) const {
    return (bits_[static_cast<std::size_t>(u) * row_words_ + (v >> 6)] >> (v & 63)) & 1U;
  }
  void set(int u, int v, bool value);

  bool abs_valid(int u) const { return valid_[static_cast<std::size_t>(u)] != 0; }
  /// Marks a cell invalid and clears its row.
  void invalidate(int u);

  std::span<const std::uint64_t> row(int u) const {
    return {bits_.data() + static_cast<std::size_t>(u) * row_words_, static_cast<std::size_t>(row_words_)};
  }
  std::span<std::uint64_t> row(int u) {
    return {bits_.data() + static_cast<std::size_t>(u) * row_words_, static_cast<std::size_t>(row_words_)};
  }

  std::size_t count_ones() const;

  friend bool operator==(const Gcm&, const Gcm&) = default;

 private:
  GridSpec spec_;
  double outage_threshold_ = 0.1;
  double gu_alt_ = 1.0;
  int row_words_ = 0;
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint8_t> valid_;
};

/**
 * @brief Evaluate every (ABS cell, GU cell) pair through the channel chain.
 *
 * GU cells are evaluated at params.gu_alt. ABS cells inside the no-fly set get
 * zero rows and are flagged invalid. Work is split across ABS rows on `threads`
 * workers (0 = hardware concurrency); the result does not depend on the split.
 */
Gcm build_gcm(const Environment& env, const ChannelParams& params, const GridSpec& spec, unsigned threads = 0);

/// Byte size of the fixed part of the file header.
inline constexpr std::size_t kGcmFixedHeaderBytes = 80;
inline constexpr std::uint32_t kGcmFormatVersion = 1;

/// Total file size for a grid: fixed header, validity bitset, Z bitset.
std::uintmax_t gcm_file_size(const GridSpec& spec);

void save_gcm(const Gcm& gcm, const std::filesystem::path& path);
Gcm load_gcm(const std::filesystem::path& path);

}  // namespace gcmopt
