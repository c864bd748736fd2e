#include "gcmopt/gcm.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>

#include "gcmopt/error.hpp"
#include "gcmopt/hash.hpp"

namespace gcmopt {

namespace {

constexpr std::array<char, 8> kMagic = {'G', 'C', 'M', 'Z', 'B', 'I', 'T', '\0'};

void put_u32(std::uint8_t* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put_u64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put_f64(std::uint8_t* out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(const std::uint8_t* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}
double get_f64(const std::uint8_t* in) { return std::bit_cast<double>(get_u64(in)); }

std::size_t bytes_for_bits(std::uint64_t bits) { return static_cast<std::size_t>((bits + 7) / 8); }

void check_abs_index(int u, const GridSpec& spec) {
  if (u < 0 || u >= spec.abs_cells()) throw std::out_of_range("ABS cell index " + std::to_string(u) + " out of range");
}
void check_gu_index(int v, const GridSpec& spec) {
  if (v < 0 || v >= spec.gu_cells()) throw std::out_of_range("GU cell index " + std::to_string(v) + " out of range");
}

}  // namespace

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

void GridSpec::validate() const {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw config_error("grid area must be positive");
  if (k1 <= 0 || k2 <= 0 || k1p <= 0 || k2p <= 0) throw config_error("grid counts must be positive");
  if (!(abs_alt > 0.0)) throw config_error("ABS altitude must be positive");
}

int flatten_abs(int i, int j, const GridSpec& spec) {
  if (i < 0 || i >= spec.k1 || j < 0 || j >= spec.k2) throw std::out_of_range("ABS grid index out of range");
  return i * spec.k2 + j;
}

int flatten_gu(int i, int j, const GridSpec& spec) {
  if (i < 0 || i >= spec.k1p || j < 0 || j >= spec.k2p) throw std::out_of_range("GU grid index out of range");
  return i * spec.k2p + j;
}

std::pair<int, int> unflatten_abs(int u, const GridSpec& spec) {
  check_abs_index(u, spec);
  return {u / spec.k2, u % spec.k2};
}

std::pair<int, int> unflatten_gu(int v, const GridSpec& spec) {
  check_gu_index(v, spec);
  return {v / spec.k2p, v % spec.k2p};
}

Point3 cell_center_abs(int u, const GridSpec& spec) {
  const auto [i, j] = unflatten_abs(u, spec);
  return {(i + 0.5) * spec.abs_cell_x(), (j + 0.5) * spec.abs_cell_y(), spec.abs_alt};
}

Point3 cell_center_gu(int v, const GridSpec& spec) {
  const auto [i, j] = unflatten_gu(v, spec);
  return {(i + 0.5) * spec.gu_cell_x(), (j + 0.5) * spec.gu_cell_y(), 0.0};
}

int abs_cell_of(Point2 xy, const GridSpec& spec) {
  const int i = std::clamp(static_cast<int>(std::floor(xy.x / spec.abs_cell_x())), 0, spec.k1 - 1);
  const int j = std::clamp(static_cast<int>(std::floor(xy.y / spec.abs_cell_y())), 0, spec.k2 - 1);
  return i * spec.k2 + j;
}

int gu_cell_of(Point2 xy, const GridSpec& spec) {
  const int i = std::clamp(static_cast<int>(std::floor(xy.x / spec.gu_cell_x())), 0, spec.k1p - 1);
  const int j = std::clamp(static_cast<int>(std::floor(xy.y / spec.gu_cell_y())), 0, spec.k2p - 1);
  return i * spec.k2p + j;
}

Gcm::Gcm(const GridSpec& spec, double outage_threshold, double gu_alt)
    : spec_(spec),
      outage_threshold_(outage_threshold),
      gu_alt_(gu_alt),
      row_words_((spec.gu_cells() + 63) / 64),
      bits_(static_cast<std::size_t>(spec.abs_cells()) * static_cast<std::size_t>(row_words_), 0),
      valid_(static_cast<std::size_t>(spec.abs_cells()), 1) {}

void Gcm::set(int u, int v, bool value) {
  auto& word = bits_[static_cast<std::size_t>(u) * row_words_ + (v >> 6)];
  const std::uint64_t mask = std::uint64_t{1} << (v & 63);
  word = value ? (word | mask) : (word & ~mask);
}

void Gcm::invalidate(int u) {
  valid_[static_cast<std::size_t>(u)] = 0;
  auto r = row(u);
  std::fill(r.begin(), r.end(), 0);
}

std::size_t Gcm::count_ones() const {
  std::size_t n = 0;
  for (auto w : bits_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

Gcm build_gcm(const Environment& env, const ChannelParams& params, const GridSpec& spec, unsigned threads) {
  spec.validate();
  params.validate();
  if (std::abs(params.abs_alt - spec.abs_alt) > 1e-9) {
    throw config_error("channel ABS altitude does not match grid ABS altitude");
  }
  if (std::abs(spec.d1 - env.d1()) > 1e-9 || std::abs(spec.d2 - env.d2()) > 1e-9) {
    throw config_error("grid area does not match environment area");
  }

  Gcm gcm(spec, params.outage_threshold, params.gu_alt);
  const int n_abs = spec.abs_cells();
  const int n_gu = spec.gu_cells();

  std::vector<Point3> gu_points(static_cast<std::size_t>(n_gu));
  for (int v = 0; v < n_gu; ++v) {
    const Point3 c = cell_center_gu(v, spec);
    gu_points[static_cast<std::size_t>(v)] = {c.x, c.y, params.gu_alt};
  }

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int u = next++; u < n_abs; u = next++) {
      const Point3 a = cell_center_abs(u, spec);
      if (env.is_obstructed_cell(horizontal(a), spec.abs_alt)) {
        gcm.invalidate(u);
        continue;
      }
      auto row = gcm.row(u);
      for (int v = 0; v < n_gu; ++v) {
        if (is_covered(params, env, a, gu_points[static_cast<std::size_t>(v)])) {
          row[static_cast<std::size_t>(v >> 6)] |= std::uint64_t{1} << (v & 63);
        }
      }
    }
  };

  unsigned n_threads = threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : threads;
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(std::max(1, n_abs)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return gcm;
}

std::uintmax_t gcm_file_size(const GridSpec& spec) {
  const auto n_abs = static_cast<std::uint64_t>(spec.abs_cells());
  const auto n_gu = static_cast<std::uint64_t>(spec.gu_cells());
  return kGcmFixedHeaderBytes + bytes_for_bits(n_abs) + bytes_for_bits(n_abs * n_gu);
}

void save_gcm(const Gcm& gcm, const std::filesystem::path& path) {
  const GridSpec& spec = gcm.spec();
  const auto n_abs = static_cast<std::uint64_t>(spec.abs_cells());
  const auto n_gu = static_cast<std::uint64_t>(spec.gu_cells());

  std::vector<std::uint8_t> body(bytes_for_bits(n_abs) + bytes_for_bits(n_abs * n_gu), 0);
  std::uint8_t* validity = body.data();
  std::uint8_t* payload = body.data() + bytes_for_bits(n_abs);
  for (std::uint64_t u = 0; u < n_abs; ++u) {
    if (gcm.abs_valid(static_cast<int>(u))) validity[u >> 3] |= static_cast<std::uint8_t>(1U << (u & 7));
    for (std::uint64_t v = 0; v < n_gu; ++v) {
      if (gcm.z(static_cast<int>(u), static_cast<int>(v))) {
        const std::uint64_t bit = u * n_gu + v;
        payload[bit >> 3] |= static_cast<std::uint8_t>(1U << (bit & 7));
      }
    }
  }
  Fnv1a64 checksum;
  checksum.update(body);

  std::array<std::uint8_t, kGcmFixedHeaderBytes> header{};
  std::memcpy(header.data(), kMagic.data(), kMagic.size());
  put_u32(header.data() + 8, kGcmFormatVersion);
  put_u32(header.data() + 12, static_cast<std::uint32_t>(spec.k1));
  put_u32(header.data() + 16, static_cast<std::uint32_t>(spec.k2));
  put_u32(header.data() + 20, static_cast<std::uint32_t>(spec.k1p));
  put_u32(header.data() + 24, static_cast<std::uint32_t>(spec.k2p));
  put_u32(header.data() + 28, 0);
  put_f64(header.data() + 32, spec.d1);
  put_f64(header.data() + 40, spec.d2);
  put_f64(header.data() + 48, spec.abs_alt);
  put_f64(header.data() + 56, gcm.gu_alt());
  put_f64(header.data() + 64, gcm.outage_threshold());
  put_u64(header.data() + 72, checksum.digest());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw io_error("failed writing " + path.string());
}

Gcm load_gcm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kGcmFixedHeaderBytes) throw io_error(path.string() + ": truncated GCM header");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) throw io_error(path.string() + ": bad GCM magic");
  const std::uint32_t version = get_u32(bytes.data() + 8);
  if (version != kGcmFormatVersion) {
    throw io_error(path.string() + ": unsupported GCM version " + std::to_string(version));
  }

  GridSpec spec;
  spec.k1 = static_cast<int>(get_u32(bytes.data() + 12));
  spec.k2 = static_cast<int>(get_u32(bytes.data() + 16));
  spec.k1p = static_cast<int>(get_u32(bytes.data() + 20));
  spec.k2p = static_cast<int>(get_u32(bytes.data() + 24));
  spec.d1 = get_f64(bytes.data() + 32);
  spec.d2 = get_f64(bytes.data() + 40);
  spec.abs_alt = get_f64(bytes.data() + 48);
  const double gu_alt = get_f64(bytes.data() + 56);
  const double eta = get_f64(bytes.data() + 64);
  const std::uint64_t expected_sum = get_u64(bytes.data() + 72);
  try {
    spec.validate();
  } catch (const Error&) {
    throw io_error(path.string() + ": corrupt GCM header");
  }
  if (bytes.size() != gcm_file_size(spec)) {
    throw io_error(path.string() + ": GCM size " + std::to_string(bytes.size()) + " does not match header (expected " +
                   std::to_string(gcm_file_size(spec)) + ")");
  }

  Fnv1a64 checksum;
  checksum.update(std::span<const std::uint8_t>(bytes).subspan(kGcmFixedHeaderBytes));
  if (checksum.digest() != expected_sum) throw io_error(path.string() + ": GCM checksum mismatch");

  const auto n_abs = static_cast<std::uint64_t>(spec.abs_cells());
  const auto n_gu = static_cast<std::uint64_t>(spec.gu_cells());
  const std::uint8_t* validity = bytes.data() + kGcmFixedHeaderBytes;
  const std::uint8_t* payload = validity + bytes_for_bits(n_abs);

  Gcm gcm(spec, eta, gu_alt);
  for (std::uint64_t u = 0; u < n_abs; ++u) {
    const bool valid = (validity[u >> 3] >> (u & 7)) & 1U;
    if (!valid) {
      gcm.invalidate(static_cast<int>(u));
      continue;
    }
    for (std::uint64_t v = 0; v < n_gu; ++v) {
      const std::uint64_t bit = u * n_gu + v;
      if ((payload[bit >> 3] >> (bit & 7)) & 1U) gcm.set(static_cast<int>(u), static_cast<int>(v), true);
    }
  }
  return gcm;
}

}  // namespace gcmopt
