#include "gcmopt/config.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "gcmopt/error.hpp"
#include "gcmopt/hash.hpp"

namespace gcmopt {

namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects anything it was not asked about.
class Section {
 public:
  Section(const json& doc, std::string name) : doc_(doc), name_(std::move(name)) {
    if (!doc_.is_object()) throw config_error("'" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!doc_.contains(key)) return;
    const json& v = doc_.at(key);
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v.is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
      ok = v.is_number_integer() && (std::is_signed_v<T> || v.is_number_unsigned() || v.get<std::int64_t>() >= 0);
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v.is_number();
    } else {
      ok = v.is_string();
    }
    if (!ok) throw config_error("'" + path(key) + "' has the wrong type");
    out = v.get<T>();
  }

  void get_optional(const std::string& key, std::optional<double>& out) {
    seen_.insert(key);
    if (!doc_.contains(key) || doc_.at(key).is_null()) return;
    double v = 0.0;
    get(key, v);
    out = v;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return doc_.contains(key);
  }

  const json& at(const std::string& key) const { return doc_.at(key); }
  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  void finish() const {
    for (const auto& item : doc_.items()) {
      if (!seen_.contains(item.key())) throw config_error("unknown key '" + path(item.key()) + "'");
    }
  }

 private:
  const json& doc_;
  std::string name_;
  std::set<std::string> seen_;
};

void check_header(Section& s, const char* format, bool required) {
  std::string fmt = format;
  s.get("format", fmt);
  if (fmt != format) throw config_error(std::string("expected format '") + format + "', got '" + fmt + "'");
  if (!s.has("version")) {
    if (required) throw config_error("missing 'version'");
    return;
  }
  int version = 0;
  s.get("version", version);
  if (version != kConfigVersion) throw config_error("unsupported config version " + std::to_string(version));
}

void read_uma(const json& doc, UmaConstants& c) {
  Section s(doc, "channel.uma");
  s.get("los_intercept", c.los_intercept);
  s.get("los_slope_near", c.los_slope_near);
  s.get("los_slope_far", c.los_slope_far);
  s.get("los_breakpoint_coeff", c.los_breakpoint_coeff);
  s.get("freq_slope", c.freq_slope);
  s.get("nlos_intercept", c.nlos_intercept);
  s.get("nlos_slope", c.nlos_slope);
  s.get("nlos_height_coeff", c.nlos_height_coeff);
  s.get("nlos_height_ref", c.nlos_height_ref);
  s.get("effective_env_height", c.effective_env_height);
  s.get("min_distance_3d", c.min_distance_3d);
  s.finish();
}

void read_trial_body(Section& s, TrialConfig& cfg) {
  if (s.has("grid")) {
    Section g(s.at("grid"), "grid");
    g.get("d1", cfg.grid.d1);
    g.get("d2", cfg.grid.d2);
    g.get("k1", cfg.grid.k1);
    g.get("k2", cfg.grid.k2);
    g.get("k1p", cfg.grid.k1p);
    g.get("k2p", cfg.grid.k2p);
    g.get("abs_alt", cfg.grid.abs_alt);
    g.finish();
  }
  cfg.channel.abs_alt = cfg.grid.abs_alt;
  if (s.has("channel")) {
    Section c(s.at("channel"), "channel");
    c.get("tx_power_dbm", cfg.channel.tx_power_dbm);
    c.get("noise_dbm", cfg.channel.noise_dbm);
    c.get("carrier_ghz", cfg.channel.carrier_ghz);
    c.get("k_min_db", cfg.channel.k_min_db);
    c.get("k_max_db", cfg.channel.k_max_db);
    c.get("snr_threshold_db", cfg.channel.snr_threshold_db);
    c.get("outage_threshold", cfg.channel.outage_threshold);
    c.get("gu_alt", cfg.channel.gu_alt);
    if (c.has("uma")) read_uma(c.at("uma"), cfg.channel.uma);
    c.finish();
  }
  if (s.has("environment")) {
    Section e(s.at("environment"), "environment");
    e.get("block_count", cfg.environment.block_count);
    e.get("block_width", cfg.environment.block_width);
    e.get("height_min", cfg.environment.heights.min);
    e.get("height_max", cfg.environment.heights.max);
    e.get("seed", cfg.environment.seed);
    e.finish();
  }
  if (s.has("timing")) {
    Section t(s.at("timing"), "timing");
    t.get("trial", cfg.timing.trial);
    t.get("period", cfg.timing.period);
    t.get("flight", cfg.timing.flight);
    t.get("serve", cfg.timing.serve);
    t.get("planning", cfg.timing.planning);
    t.get("step", cfg.timing.step);
    t.finish();
  }
  s.get("abs_count", cfg.abs_count);
  s.get("gu_count", cfg.gu_count);
  s.get("abs_max_speed", cfg.abs_max_speed);
  s.get("gu_speed", cfg.gu_speed);
  if (s.has("solver")) {
    Section v(s.at("solver"), "solver");
    std::string kind = solver_name(cfg.solver.kind);
    v.get("kind", kind);
    cfg.solver.kind = parse_solver(kind);
    v.get("duplication", cfg.solver.duplication);
    v.get_optional("step_size", cfg.solver.step_size);
    std::string tie = cfg.solver.tie == TieRule::kZero ? "zero" : "one";
    v.get("tie", tie);
    if (tie == "zero") {
      cfg.solver.tie = TieRule::kZero;
    } else if (tie == "one") {
      cfg.solver.tie = TieRule::kOne;
    } else {
      throw config_error("solver.tie must be 'zero' or 'one'");
    }
    v.get("oracle_cap", cfg.solver.oracle.enumeration_cap);
    v.get("branch_and_bound", cfg.solver.oracle.branch_and_bound);
    v.get("ea_rounds", cfg.solver.ea_rounds);
    v.get_optional("mutation_radius", cfg.solver.mutation_radius);
    v.finish();
  }
  s.get("mobility_seed", cfg.mobility_seed);
  s.get("shadow_oracle", cfg.shadow_oracle);
  s.get("plan_before_start", cfg.plan_before_start);
  s.get("weighted", cfg.weighted);
  s.get("gcm_file", cfg.gcm_file);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename T>
std::vector<T> read_list(const json& doc, const std::string& name) {
  if (!doc.is_array()) throw config_error("'" + name + "' must be a list");
  std::vector<T> out;
  for (const auto& v : doc) {
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw config_error("'" + name + "' must hold integers");
    } else {
      if (!v.is_number()) throw config_error("'" + name + "' must hold numbers");
    }
    out.push_back(v.get<T>());
  }
  return out;
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

TrialConfig trial_config_from_json(const nlohmann::json& doc) {
  Section s(doc, "");
  check_header(s, "gcmopt-config", false);
  TrialConfig cfg;
  read_trial_body(s, cfg);
  s.finish();
  cfg.validate();
  return cfg;
}

nlohmann::json grid_to_json(const GridSpec& spec) {
  return {{"d1", spec.d1}, {"d2", spec.d2},   {"k1", spec.k1},          {"k2", spec.k2},
          {"k1p", spec.k1p}, {"k2p", spec.k2p}, {"abs_alt", spec.abs_alt}};
}

nlohmann::json channel_to_json(const ChannelParams& params) {
  const UmaConstants& c = params.uma;
  return {{"tx_power_dbm", params.tx_power_dbm},
          {"noise_dbm", params.noise_dbm},
          {"carrier_ghz", params.carrier_ghz},
          {"k_min_db", params.k_min_db},
          {"k_max_db", params.k_max_db},
          {"snr_threshold_db", params.snr_threshold_db},
          {"outage_threshold", params.outage_threshold},
          {"gu_alt", params.gu_alt},
          {"uma",
           {{"los_intercept", c.los_intercept},
            {"los_slope_near", c.los_slope_near},
            {"los_slope_far", c.los_slope_far},
            {"los_breakpoint_coeff", c.los_breakpoint_coeff},
            {"freq_slope", c.freq_slope},
            {"nlos_intercept", c.nlos_intercept},
            {"nlos_slope", c.nlos_slope},
            {"nlos_height_coeff", c.nlos_height_coeff},
            {"nlos_height_ref", c.nlos_height_ref},
            {"effective_env_height", c.effective_env_height},
            {"min_distance_3d", c.min_distance_3d}}}};
}

nlohmann::json trial_config_to_json(const TrialConfig& cfg) {
  return {{"format", "gcmopt-config"},
          {"version", kConfigVersion},
          {"grid", grid_to_json(cfg.grid)},
          {"channel", channel_to_json(cfg.channel)},
          {"environment",
           {{"block_count", cfg.environment.block_count},
            {"block_width", cfg.environment.block_width},
            {"height_min", cfg.environment.heights.min},
            {"height_max", cfg.environment.heights.max},
            {"seed", cfg.environment.seed}}},
          {"timing",
           {{"trial", cfg.timing.trial},
            {"period", cfg.timing.period},
            {"flight", cfg.timing.flight},
            {"serve", cfg.timing.serve},
            {"planning", cfg.timing.planning},
            {"step", cfg.timing.step}}},
          {"abs_count", cfg.abs_count},
          {"gu_count", cfg.gu_count},
          {"abs_max_speed", cfg.abs_max_speed},
          {"gu_speed", cfg.gu_speed},
          {"solver",
           {{"kind", solver_name(cfg.solver.kind)},
            {"duplication", cfg.solver.duplication},
            {"step_size", optional_json(cfg.solver.step_size)},
            {"tie", cfg.solver.tie == TieRule::kZero ? "zero" : "one"},
            {"oracle_cap", cfg.solver.oracle.enumeration_cap},
            {"branch_and_bound", cfg.solver.oracle.branch_and_bound},
            {"ea_rounds", cfg.solver.ea_rounds},
            {"mutation_radius", optional_json(cfg.solver.mutation_radius)}}},
          {"mobility_seed", cfg.mobility_seed},
          {"shadow_oracle", cfg.shadow_oracle},
          {"plan_before_start", cfg.plan_before_start},
          {"weighted", cfg.weighted},
          {"gcm_file", cfg.gcm_file}};
}

bool SweepAxes::empty() const {
  return grid_length.empty() && abs_count.empty() && gu_count.empty() && block_count.empty() && gu_speed.empty();
}

void ExperimentSpec::validate() const {
  base.validate();
  if (seeds.empty()) throw config_error("experiment needs at least one seed");
  if (solvers.empty()) throw config_error("experiment needs at least one solver");
  if (output_dir.empty()) throw config_error("experiment needs an output directory");
  for (double len : sweep.grid_length) {
    if (!(len > 0.0)) throw config_error("grid length must be positive");
    for (double side : {base.grid.d1, base.grid.d2}) {
      const double k = side / len;
      if (std::abs(k - std::round(k)) > 1e-9 * k) {
        throw config_error("grid length " + format_number(len) + " does not divide the area");
      }
    }
  }
  for (const auto& point : expand_sweep(sweep)) {
    for (SolverKind s : solvers) trial_for(*this, point, seeds.front(), s).validate();
  }
}

ExperimentSpec experiment_from_json(const nlohmann::json& doc) {
  Section s(doc, "");
  check_header(s, "gcmopt-experiment", true);
  ExperimentSpec spec;
  if (s.has("base")) {
    Section b(s.at("base"), "base");
    read_trial_body(b, spec.base);
    b.finish();
  }
  if (s.has("seeds")) spec.seeds = read_list<std::uint64_t>(s.at("seeds"), "seeds");
  if (s.has("solvers")) {
    if (!s.at("solvers").is_array()) throw config_error("'solvers' must be a list");
    for (const auto& v : s.at("solvers")) {
      if (!v.is_string()) throw config_error("'solvers' must hold names");
      spec.solvers.push_back(parse_solver(v.get<std::string>()));
    }
  } else {
    spec.solvers.push_back(spec.base.solver.kind);
  }
  if (s.has("sweep")) {
    Section w(s.at("sweep"), "sweep");
    if (w.has("grid_length")) spec.sweep.grid_length = read_list<double>(w.at("grid_length"), "sweep.grid_length");
    if (w.has("abs_count")) spec.sweep.abs_count = read_list<int>(w.at("abs_count"), "sweep.abs_count");
    if (w.has("gu_count")) spec.sweep.gu_count = read_list<int>(w.at("gu_count"), "sweep.gu_count");
    if (w.has("block_count")) spec.sweep.block_count = read_list<int>(w.at("block_count"), "sweep.block_count");
    if (w.has("gu_speed")) spec.sweep.gu_speed = read_list<double>(w.at("gu_speed"), "sweep.gu_speed");
    w.finish();
  }
  std::string mode = "per_seed";
  s.get("environment_seeds", mode);
  if (mode == "per_seed") {
    spec.environment_seeds = EnvironmentSeedMode::kPerSeed;
  } else if (mode == "fixed") {
    spec.environment_seeds = EnvironmentSeedMode::kFixed;
  } else {
    throw config_error("environment_seeds must be 'per_seed' or 'fixed'");
  }
  s.get("output_dir", spec.output_dir);
  s.get("write_trajectories", spec.write_trajectories);
  s.finish();
  spec.validate();
  return spec;
}

nlohmann::json experiment_to_json(const ExperimentSpec& spec) {
  json base = trial_config_to_json(spec.base);
  base.erase("format");
  base.erase("version");
  json solvers = json::array();
  for (SolverKind s : spec.solvers) solvers.push_back(solver_name(s));
  json sweep = json::object();
  if (!spec.sweep.grid_length.empty()) sweep["grid_length"] = spec.sweep.grid_length;
  if (!spec.sweep.abs_count.empty()) sweep["abs_count"] = spec.sweep.abs_count;
  if (!spec.sweep.gu_count.empty()) sweep["gu_count"] = spec.sweep.gu_count;
  if (!spec.sweep.block_count.empty()) sweep["block_count"] = spec.sweep.block_count;
  if (!spec.sweep.gu_speed.empty()) sweep["gu_speed"] = spec.sweep.gu_speed;
  return {{"format", "gcmopt-experiment"},
          {"version", kConfigVersion},
          {"base", base},
          {"seeds", spec.seeds},
          {"solvers", solvers},
          {"sweep", sweep},
          {"environment_seeds", spec.environment_seeds == EnvironmentSeedMode::kFixed ? "fixed" : "per_seed"},
          {"output_dir", spec.output_dir},
          {"write_trajectories", spec.write_trajectories}};
}

std::string SweepPoint::label() const {
  std::string out;
  const auto add = [&](const std::string& part) { out += (out.empty() ? "" : "_") + part; };
  if (grid_length) add("len" + format_number(*grid_length));
  if (abs_count) add("N" + std::to_string(*abs_count));
  if (gu_count) add("M" + std::to_string(*gu_count));
  if (block_count) add("L" + std::to_string(*block_count));
  if (gu_speed) add("vq" + format_number(*gu_speed));
  return out.empty() ? "base" : out;
}

std::vector<SweepPoint> expand_sweep(const SweepAxes& axes) {
  std::vector<SweepPoint> points{SweepPoint{}};
  const auto expand = [&](const auto& values, auto setter) {
    if (values.empty()) return;
    std::vector<SweepPoint> next;
    for (const auto& p : points) {
      for (const auto& v : values) {
        SweepPoint q = p;
        setter(q, v);
        next.push_back(q);
      }
    }
    points = std::move(next);
  };
  expand(axes.grid_length, [](SweepPoint& p, double v) { p.grid_length = v; });
  expand(axes.abs_count, [](SweepPoint& p, int v) { p.abs_count = v; });
  expand(axes.gu_count, [](SweepPoint& p, int v) { p.gu_count = v; });
  expand(axes.block_count, [](SweepPoint& p, int v) { p.block_count = v; });
  expand(axes.gu_speed, [](SweepPoint& p, double v) { p.gu_speed = v; });
  return points;
}

TrialConfig trial_for(const ExperimentSpec& spec, const SweepPoint& point, std::uint64_t seed, SolverKind solver) {
  TrialConfig cfg = spec.base;
  if (point.grid_length) {
    cfg.grid.k1 = cfg.grid.k1p = static_cast<int>(std::lround(cfg.grid.d1 / *point.grid_length));
    cfg.grid.k2 = cfg.grid.k2p = static_cast<int>(std::lround(cfg.grid.d2 / *point.grid_length));
  }
  if (point.abs_count) cfg.abs_count = *point.abs_count;
  if (point.gu_count) cfg.gu_count = *point.gu_count;
  if (point.block_count) cfg.environment.block_count = *point.block_count;
  if (point.gu_speed) cfg.gu_speed = *point.gu_speed;
  cfg.mobility_seed = seed;
  if (spec.environment_seeds == EnvironmentSeedMode::kPerSeed) {
    cfg.environment.seed = derive_seed(spec.base.environment.seed, "environment", seed);
  }
  cfg.solver.kind = solver;
  return cfg;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << text;
  if (!out) throw io_error("write failed for " + path.string());
}

std::string environment_hash(const Environment& env) { return hex64(fnv1a64(environment_to_json(env).dump())); }
std::string channel_hash(const ChannelParams& params) {
  json doc = channel_to_json(params);
  doc["abs_alt"] = params.abs_alt;
  return hex64(fnv1a64(doc.dump()));
}
std::string grid_hash(const GridSpec& spec) { return hex64(fnv1a64(grid_to_json(spec).dump())); }

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a64(bytes));
}

std::filesystem::path sidecar_path(const std::filesystem::path& gcm_path) {
  return std::filesystem::path(gcm_path.string() + ".json");
}

nlohmann::json gcm_sidecar(const std::filesystem::path& gcm_path, const Environment& env, const TrialConfig& cfg) {
  return {{"format", "gcmopt-gcm-sidecar"},
          {"version", kConfigVersion},
          {"environment_hash", environment_hash(env)},
          {"channel_hash", channel_hash(cfg.channel)},
          {"grid_hash", grid_hash(cfg.grid)},
          {"file_checksum", file_checksum(gcm_path)}};
}

Gcm load_cached_gcm(const TrialConfig& cfg, const Environment& env) {
  const std::filesystem::path path = cfg.gcm_file;
  const std::filesystem::path side = sidecar_path(path);
  if (!std::filesystem::exists(side)) throw io_error("cached map " + path.string() + " has no sidecar " + side.string());
  const json expected = gcm_sidecar(path, env, cfg);
  const json found = read_json_file(side);
  for (const char* key : {"environment_hash", "channel_hash", "grid_hash", "file_checksum"}) {
    if (!found.contains(key) || found.at(key) != expected.at(key)) {
      throw io_error(std::string("cached map ") + path.string() + " does not match this scenario (" + key + ")");
    }
  }
  Gcm gcm = load_gcm(path);
  if (!(gcm.spec() == cfg.grid)) throw io_error("cached map grid does not match the scenario");
  return gcm;
}

}  // namespace gcmopt
