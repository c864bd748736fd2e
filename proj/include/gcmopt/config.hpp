#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcmopt/sim.hpp"

namespace gcmopt {

inline constexpr int kConfigVersion = 1;

/// Missing keys keep their defaults; unknown keys are rejected. Validates the result.
TrialConfig trial_config_from_json(const nlohmann::json& doc);
/// Complete document with every key present.
nlohmann::json trial_config_to_json(const TrialConfig& cfg);

nlohmann::json channel_to_json(const ChannelParams& params);
nlohmann::json grid_to_json(const GridSpec& spec);

struct SweepAxes {
  std::vector<double> grid_length;  // applied to both ABS and GU grids
  std::vector<int> abs_count;
  std::vector<int> gu_count;
  std::vector<int> block_count;
  std::vector<double> gu_speed;

  bool empty() const;
};

enum class EnvironmentSeedMode { kFixed, kPerSeed };

struct ExperimentSpec {
  TrialConfig base;
  std::vector<std::uint64_t> seeds;
  std::vector<SolverKind> solvers;
  SweepAxes sweep;
  EnvironmentSeedMode environment_seeds = EnvironmentSeedMode::kPerSeed;
  std::string output_dir = "runs/default";
  bool write_trajectories = true;

  void validate() const;
};

ExperimentSpec experiment_from_json(const nlohmann::json& doc);
nlohmann::json experiment_to_json(const ExperimentSpec& spec);

/// One point of the sweep grid; unset axes keep the base value.
struct SweepPoint {
  std::optional<double> grid_length;
  std::optional<int> abs_count;
  std::optional<int> gu_count;
  std::optional<int> block_count;
  std::optional<double> gu_speed;

  std::string label() const;  // e.g. "L25_N5" or "base"
};

/// Cartesian product of the sweep axes in declaration order (one empty point if no axes).
std::vector<SweepPoint> expand_sweep(const SweepAxes& axes);

/// Base config with the sweep point, seed and solver applied.
TrialConfig trial_for(const ExperimentSpec& spec, const SweepPoint& point, std::uint64_t seed, SolverKind solver);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Hex FNV-1a digests of canonical JSON forms.
std::string environment_hash(const Environment& env);
std::string channel_hash(const ChannelParams& params);
std::string grid_hash(const GridSpec& spec);
std::string file_checksum(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& gcm_path);
nlohmann::json gcm_sidecar(const std::filesystem::path& gcm_path, const Environment& env, const TrialConfig& cfg);

/// Loads cfg.gcm_file after checking its sidecar against env and cfg; any mismatch is an IO Error.
Gcm load_cached_gcm(const TrialConfig& cfg, const Environment& env);

}  // namespace gcmopt
