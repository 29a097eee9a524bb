#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfs/atom_model.hpp"
#include "rfs/basis.hpp"
#include "rfs/errors.hpp"
#include "rfs/geometry.hpp"
#include "rfs/pulses.hpp"

namespace rfs {

using Json = nlohmann::ordered_json;

enum class GeometryMode { Uniform, Sampled };
enum class RunMode { Mcwf, Master };

struct GeometryConfig {
  GeometryMode mode = GeometryMode::Uniform;
  // Uniform mode: every pair shifted by this value; absent means "auto",
  // i.e. 10x the peak excitation linewidth of the resolved schedule.
  std::optional<double> delta_uniform;
  // Sampled mode
  double box_side = 2.0;                       // um
  double min_separation = kDefaultMinSeparation;
  double c6 = kDefaultC6;
  std::uint64_t seed = 1;
};

struct OutputConfig {
  int grid_points = 81;
  std::string dir = "out";
  bool write_trajectories = false;
};

struct PoissonConfig {
  bool enabled = true;
  double mean_n = 5.0;
};

struct CalibrationConfig {
  int n_atoms = 5;
  int trajectories = 100;
  double target_p1 = 0.9;
  std::vector<double> peaks;      // omega_ge_peak grid (empty -> keep base)
  std::vector<double> delta_es;   // delta_e grid
  std::vector<double> t_rises;    // rise-time grid
  std::string out_file = "calibrated_preset.json";
};

struct RunConfig {
  Scheme scheme = Scheme::A;
  SchemeConfig scheme_config;           // scheme-B microwave parameters
  std::optional<double> gamma_eg_override;
  std::optional<double> gamma_es_override;
  double gamma_re = 0.003;
  double gamma_r = 0.0;
  PulseSchedule pulse;
  GeometryConfig geometry;
  std::vector<int> atoms = {5};
  int trajectories = 500;
  std::uint64_t base_seed = 20260809;
  RunMode mode = RunMode::Mcwf;
  int workers = 0;                      // 0 = RFS_WORKERS env / hardware
  bool prune = true;
  std::string initial_levels;           // e.g. "ge"; empty = all ground
  OutputConfig output;
  PoissonConfig poisson;
  CalibrationConfig calibration;

  // Single-atom rates implied by the scheme, with explicit overrides taking
  // precedence.
  AtomRates resolved_rates() const {
    SchemeConfig sc = scheme_config;
    sc.variant = scheme;
    auto [geg, ges] = sc.branching_rates();
    AtomRates r;
    r.gamma_eg = gamma_eg_override.value_or(geg);
    r.gamma_es = gamma_es_override.value_or(ges);
    r.gamma_re = gamma_re;
    r.gamma_r = gamma_r;
    r.delta_e = pulse.delta_e_level;
    return r;
  }

  // Peak two-photon linewidth of this run's drive, used for the automatic
  // uniform blockade shift and the blockade diagnostics.
  double peak_linewidth() const {
    return excitation_linewidth(pulse.omega_ge_peak, pulse.omega_er_level,
                                resolved_rates().gamma_e_total());
  }

  void validate() const {
    AtomRates r = resolved_rates();
    try {
      r.validate();
    } catch (const std::exception& ex) {
      throw config_error("rates", ex.what());
    }
    try {
      pulse.validate();
    } catch (const std::exception& ex) {
      throw config_error("pulse", ex.what());
    }
    if (atoms.empty()) throw config_error("atoms", "must not be empty");
    for (int n : atoms) {
      if (n < 1) throw config_error("atoms", "atom counts must be >= 1");
      if (n > kMaxAtoms)
        throw config_error("atoms", "atom count " + std::to_string(n) +
                                        " exceeds the exact bound " +
                                        std::to_string(kMaxAtoms));
      if (mode == RunMode::Master && n > 3)
        throw config_error("atoms",
                           "master mode supports at most 3 atoms");
    }
    if (trajectories < 1)
      throw config_error("trajectories", "must be >= 1");
    if (output.grid_points < 2)
      throw config_error("output.grid_points", "must be >= 2");
    if (geometry.mode == GeometryMode::Uniform) {
      if (geometry.delta_uniform && !(*geometry.delta_uniform >= 0.0))
        throw config_error("geometry.delta_uniform", "must be >= 0");
    } else {
      if (!(geometry.box_side > 0.0))
        throw config_error("geometry.box_side", "must be > 0");
      if (!(geometry.min_separation >= 0.0))
        throw config_error("geometry.min_separation", "must be >= 0");
      if (!(geometry.c6 > 0.0))
        throw config_error("geometry.c6", "must be > 0");
    }
    if (!initial_levels.empty()) {
      if (atoms.size() != 1 ||
          initial_levels.size() != static_cast<std::size_t>(atoms[0]))
        throw config_error("initial_levels",
                           "only valid for single-N runs and must have one "
                           "character per atom");
      try {
        for (char c : initial_levels) level_from_char(c);
      } catch (const std::exception& ex) {
        throw config_error("initial_levels", ex.what());
      }
    }
    if (!(poisson.mean_n > 0.0))
      throw config_error("poisson.mean_n", "must be > 0");
  }
};

// ---------------------------------------------------------------------------
// JSON (de)serialization. The emitted document round-trips losslessly.

namespace detail {

template <typename T>
T get_field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw config_error(path + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& ex) {
    throw config_error(path + key, ex.what());
  }
}

template <typename T>
T get_or(const Json& j, const std::string& key, const std::string& path,
         T fallback) {
  if (!j.contains(key)) return fallback;
  return get_field<T>(j, key, path);
}

}  // namespace detail

inline Json to_json(const RunConfig& c) {
  Json j;
  j["scheme"] = c.scheme == Scheme::A ? "A" : "B";
  j["scheme_b"] = {{"gamma_e_bare", c.scheme_config.gamma_e_bare},
                   {"omega_ee_prime", c.scheme_config.omega_ee_prime},
                   {"gamma_e_prime", c.scheme_config.gamma_e_prime}};
  Json rates;
  if (c.gamma_eg_override) rates["gamma_eg"] = *c.gamma_eg_override;
  if (c.gamma_es_override) rates["gamma_es"] = *c.gamma_es_override;
  rates["gamma_re"] = c.gamma_re;
  rates["gamma_r"] = c.gamma_r;
  j["rates"] = rates;
  j["pulse"] = {{"omega_er_level", c.pulse.omega_er_level},
                {"omega_ge_peak", c.pulse.omega_ge_peak},
                {"t_start_ge", c.pulse.t_start_ge},
                {"t_rise", c.pulse.t_rise},
                {"t_hold", c.pulse.t_hold},
                {"t_fall", c.pulse.t_fall},
                {"ramp_kind", ramp_kind_name(c.pulse.ramp_kind)},
                {"delta_e_level", c.pulse.delta_e_level},
                {"total_duration", c.pulse.total_duration}};
  Json geom;
  geom["mode"] = c.geometry.mode == GeometryMode::Uniform ? "uniform"
                                                          : "sampled";
  if (c.geometry.delta_uniform)
    geom["delta_uniform"] = *c.geometry.delta_uniform;
  else
    geom["delta_uniform"] = "auto";
  geom["box_side"] = c.geometry.box_side;
  geom["min_separation"] = c.geometry.min_separation;
  geom["c6"] = c.geometry.c6;
  geom["seed"] = c.geometry.seed;
  j["geometry"] = geom;
  j["atoms"] = c.atoms;
  j["trajectories"] = c.trajectories;
  j["base_seed"] = c.base_seed;
  j["mode"] = c.mode == RunMode::Mcwf ? "mcwf" : "master";
  j["prune"] = c.prune;
  j["initial_levels"] = c.initial_levels;
  j["output"] = {{"grid_points", c.output.grid_points},
                 {"dir", c.output.dir},
                 {"write_trajectories", c.output.write_trajectories}};
  j["poisson"] = {{"enabled", c.poisson.enabled},
                  {"mean_n", c.poisson.mean_n}};
  j["calibration"] = {{"n_atoms", c.calibration.n_atoms},
                      {"trajectories", c.calibration.trajectories},
                      {"target_p1", c.calibration.target_p1},
                      {"peaks", c.calibration.peaks},
                      {"delta_es", c.calibration.delta_es},
                      {"t_rises", c.calibration.t_rises},
                      {"out_file", c.calibration.out_file}};
  return j;
}

inline RunConfig config_from_json(const Json& j) {
  using detail::get_field;
  using detail::get_or;
  RunConfig c;

  std::string scheme = get_or<std::string>(j, "scheme", "", "A");
  if (scheme == "A")
    c.scheme = Scheme::A;
  else if (scheme == "B")
    c.scheme = Scheme::B;
  else
    throw config_error("scheme", "must be \"A\" or \"B\"");
  c.scheme_config.variant = c.scheme;

  if (j.contains("scheme_b")) {
    const Json& sb = j.at("scheme_b");
    c.scheme_config.gamma_e_bare =
        get_or<double>(sb, "gamma_e_bare", "scheme_b.", 38.0);
    c.scheme_config.omega_ee_prime =
        get_or<double>(sb, "omega_ee_prime", "scheme_b.", 5.692099788303083);
    c.scheme_config.gamma_e_prime =
        get_or<double>(sb, "gamma_e_prime", "scheme_b.", 36.0);
  }
  if (j.contains("rates")) {
    const Json& r = j.at("rates");
    if (r.contains("gamma_eg"))
      c.gamma_eg_override = get_field<double>(r, "gamma_eg", "rates.");
    if (r.contains("gamma_es"))
      c.gamma_es_override = get_field<double>(r, "gamma_es", "rates.");
    c.gamma_re = get_or<double>(r, "gamma_re", "rates.", 0.003);
    c.gamma_r = get_or<double>(r, "gamma_r", "rates.", 0.0);
  }
  if (j.contains("pulse")) {
    const Json& p = j.at("pulse");
    c.pulse.omega_er_level =
        get_or<double>(p, "omega_er_level", "pulse.", c.pulse.omega_er_level);
    c.pulse.omega_ge_peak =
        get_or<double>(p, "omega_ge_peak", "pulse.", c.pulse.omega_ge_peak);
    c.pulse.t_start_ge =
        get_or<double>(p, "t_start_ge", "pulse.", c.pulse.t_start_ge);
    c.pulse.t_rise = get_or<double>(p, "t_rise", "pulse.", c.pulse.t_rise);
    c.pulse.t_hold = get_or<double>(p, "t_hold", "pulse.", c.pulse.t_hold);
    c.pulse.t_fall = get_or<double>(p, "t_fall", "pulse.", c.pulse.t_fall);
    if (p.contains("ramp_kind")) {
      try {
        c.pulse.ramp_kind = ramp_kind_from_name(
            get_field<std::string>(p, "ramp_kind", "pulse."));
      } catch (const std::domain_error& ex) {
        throw config_error("pulse.ramp_kind", ex.what());
      }
    }
    c.pulse.delta_e_level =
        get_or<double>(p, "delta_e_level", "pulse.", c.pulse.delta_e_level);
    c.pulse.total_duration = get_or<double>(p, "total_duration", "pulse.",
                                            c.pulse.total_duration);
  }
  if (j.contains("geometry")) {
    const Json& g = j.at("geometry");
    std::string mode = get_or<std::string>(g, "mode", "geometry.", "uniform");
    if (mode == "uniform")
      c.geometry.mode = GeometryMode::Uniform;
    else if (mode == "sampled")
      c.geometry.mode = GeometryMode::Sampled;
    else
      throw config_error("geometry.mode", "must be \"uniform\" or \"sampled\"");
    if (g.contains("delta_uniform") && !g.at("delta_uniform").is_string())
      c.geometry.delta_uniform =
          get_field<double>(g, "delta_uniform", "geometry.");
    c.geometry.box_side =
        get_or<double>(g, "box_side", "geometry.", c.geometry.box_side);
    c.geometry.min_separation = get_or<double>(g, "min_separation",
                                               "geometry.",
                                               c.geometry.min_separation);
    c.geometry.c6 = get_or<double>(g, "c6", "geometry.", c.geometry.c6);
    c.geometry.seed = get_or<std::uint64_t>(g, "seed", "geometry.", 1);
  }
  if (j.contains("atoms")) {
    const Json& a = j.at("atoms");
    if (a.is_array())
      c.atoms = a.get<std::vector<int>>();
    else
      c.atoms = {a.get<int>()};
  }
  c.trajectories = get_or<int>(j, "trajectories", "", c.trajectories);
  c.base_seed = get_or<std::uint64_t>(j, "base_seed", "", c.base_seed);
  std::string mode = get_or<std::string>(j, "mode", "", "mcwf");
  if (mode == "mcwf")
    c.mode = RunMode::Mcwf;
  else if (mode == "master")
    c.mode = RunMode::Master;
  else
    throw config_error("mode", "must be \"mcwf\" or \"master\"");
  c.workers = get_or<int>(j, "workers", "", 0);
  c.prune = get_or<bool>(j, "prune", "", c.prune);
  c.initial_levels = get_or<std::string>(j, "initial_levels", "", "");
  if (j.contains("output")) {
    const Json& o = j.at("output");
    c.output.grid_points =
        get_or<int>(o, "grid_points", "output.", c.output.grid_points);
    c.output.dir = get_or<std::string>(o, "dir", "output.", c.output.dir);
    c.output.write_trajectories = get_or<bool>(
        o, "write_trajectories", "output.", c.output.write_trajectories);
  }
  if (j.contains("poisson")) {
    const Json& p = j.at("poisson");
    c.poisson.enabled = get_or<bool>(p, "enabled", "poisson.", true);
    c.poisson.mean_n = get_or<double>(p, "mean_n", "poisson.", 5.0);
  }
  if (j.contains("calibration")) {
    const Json& k = j.at("calibration");
    c.calibration.n_atoms =
        get_or<int>(k, "n_atoms", "calibration.", c.calibration.n_atoms);
    c.calibration.trajectories = get_or<int>(k, "trajectories", "calibration.",
                                             c.calibration.trajectories);
    c.calibration.target_p1 =
        get_or<double>(k, "target_p1", "calibration.", c.calibration.target_p1);
    c.calibration.peaks = get_or<std::vector<double>>(k, "peaks",
                                                      "calibration.", {});
    c.calibration.delta_es =
        get_or<std::vector<double>>(k, "delta_es", "calibration.", {});
    c.calibration.t_rises =
        get_or<std::vector<double>>(k, "t_rises", "calibration.", {});
    c.calibration.out_file = get_or<std::string>(k, "out_file", "calibration.",
                                                 c.calibration.out_file);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Figure presets. Pulse parameters are calibration outputs of this code base
// (the published figures specify shapes only graphically); they are fixed by
// reproducing the quoted survival probabilities.

inline RunConfig preset_fig2() {
  RunConfig c;
  c.scheme = Scheme::A;
  c.scheme_config.variant = Scheme::A;
  c.gamma_r = 0.0;
  c.pulse.omega_er_level = 5.0;
  c.pulse.omega_ge_peak = 30.0;
  c.pulse.t_start_ge = 0.0;
  c.pulse.t_rise = 1.6;
  c.pulse.t_hold = 0.8;
  c.pulse.t_fall = 1.6;
  c.pulse.delta_e_level = 0.0;
  c.pulse.total_duration = 4.0;
  c.atoms = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  c.trajectories = 500;
  c.output.grid_points = 81;
  return c;
}

inline RunConfig preset_fig3() {
  RunConfig c = preset_fig2();
  c.pulse.delta_e_level = 20.0;
  c.pulse.t_rise = 0.8;
  c.pulse.t_hold = 2.0;
  c.pulse.t_fall = 1.2;
  c.pulse.total_duration = 4.0;
  return c;
}

inline RunConfig preset_fig4() {
  RunConfig c = preset_fig2();
  c.scheme = Scheme::B;
  c.scheme_config.variant = Scheme::B;
  c.pulse.t_rise = 5.0;
  c.pulse.t_hold = 7.0;
  c.pulse.t_fall = 5.0;
  c.pulse.total_duration = 18.0;
  c.output.grid_points = 91;
  return c;
}

inline RunConfig preset_by_name(const std::string& name) {
  if (name == "fig2") return preset_fig2();
  if (name == "fig3") return preset_fig3();
  if (name == "fig4") return preset_fig4();
  throw config_error("preset", "unknown preset '" + name +
                                   "' (expected fig2, fig3 or fig4)");
}

}  // namespace rfs
