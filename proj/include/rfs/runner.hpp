#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfs/config.hpp"
#include "rfs/master.hpp"
#include "rfs/mcwf.hpp"
#include "rfs/observables.hpp"
#include "rfs/version.hpp"

namespace rfs {

struct ExperimentResult {
  RunConfig config;
  std::map<int, EnsembleResult> mcwf_by_n;
  std::map<int, MasterResult> master_by_n;
  std::optional<PoissonAveraged> poisson;
  std::vector<std::string> written_files;
  Json summary;
};

namespace detail {

inline std::vector<double> sample_grid(const PulseSchedule& pulse,
                                       int points) {
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] =
        pulse.total_duration * static_cast<double>(i) / (points - 1);
  grid.back() = pulse.total_duration;
  return grid;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Per-N trajectory seeds are decoupled so that sweeps do not reuse streams:
// single-N runs use base_seed directly, sweeps offset it by N * 1000003.
inline std::uint64_t seed_for_n(const RunConfig& cfg, int n) {
  if (cfg.atoms.size() == 1) return cfg.base_seed;
  return cfg.base_seed + static_cast<std::uint64_t>(n) * 1000003ull;
}

}  // namespace detail

// Geometry for one run at a given atom number, honoring the configured mode.
// In uniform mode an absent delta_uniform resolves to 10x the peak
// excitation linewidth (the blockade regime of the protocol).
inline EnsembleGeometry resolve_geometry(const RunConfig& cfg, int n) {
  if (cfg.geometry.mode == GeometryMode::Uniform) {
    double delta = cfg.geometry.delta_uniform
                       ? *cfg.geometry.delta_uniform
                       : 10.0 * cfg.peak_linewidth();
    return uniform_blockade_geometry(n, delta);
  }
  std::uint64_t seed = cfg.geometry.seed + static_cast<std::uint64_t>(n);
  Rng rng(seed);
  return sample_positions(n, cfg.geometry.box_side, cfg.geometry.min_separation,
                          rng, cfg.geometry.c6, seed);
}

inline TrajectorySetup make_setup(const RunConfig& cfg, int n) {
  TrajectorySetup setup;
  setup.schedule = cfg.pulse;
  setup.geometry = resolve_geometry(cfg, n);
  setup.rates = cfg.resolved_rates();
  setup.n_atoms = n;
  setup.sample_times = detail::sample_grid(cfg.pulse, cfg.output.grid_points);
  setup.prune = cfg.prune;
  setup.integrator = default_integrator_options(cfg.pulse, setup.rates);
  if (!cfg.initial_levels.empty()) {
    setup.initial_levels.reserve(cfg.initial_levels.size());
    for (char c : cfg.initial_levels)
      setup.initial_levels.push_back(level_from_char(c));
  }
  return setup;
}

namespace detail {

inline void write_timeseries_csv(const std::string& path,
                                 const std::vector<double>& times,
                                 const std::vector<double>& mean_n,
                                 const std::array<const std::vector<double>*,
                                                  4>& pop,
                                 const std::vector<double>& dryd,
                                 const std::vector<double>* stderr_mean_n) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open output file '" + path + "'");
  out << "t,mean_n,pop_g,pop_s,pop_e,pop_r,double_rydberg,stderr_mean_n\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    out << format_double(times[i]) << ',' << format_double(mean_n[i]) << ','
        << format_double((*pop[kG])[i]) << ',' << format_double((*pop[kS])[i])
        << ',' << format_double((*pop[kE])[i]) << ','
        << format_double((*pop[kR])[i]) << ',' << format_double(dryd[i]) << ','
        << format_double(stderr_mean_n ? (*stderr_mean_n)[i] : 0.0) << '\n';
  }
}

inline Json geometry_json(const EnsembleGeometry& g, const RunConfig& cfg) {
  Json out;
  if (cfg.geometry.mode == GeometryMode::Uniform) {
    out["mode"] = "uniform";
    out["delta_uniform"] = g.n_atoms >= 2 ? g.shift(0, 1) : 0.0;
  } else {
    out["mode"] = "sampled";
    out["seed"] = g.sample_seed;
    out["c6"] = g.c6;
    Json pos = Json::array();
    for (const auto& p : g.positions) pos.push_back({p[0], p[1], p[2]});
    out["positions"] = pos;
  }
  return out;
}

}  // namespace detail

// Runs the configured experiment (one atom number or a sweep), writes one
// time-series CSV per atom number plus a summary JSON, and returns everything
// in memory as well.
inline ExperimentResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;

  std::filesystem::create_directories(cfg.output.dir);

  AtomRates rates = cfg.resolved_rates();
  Json summary;
  summary["software_version"] = kVersion;
  Json cfg_echo = to_json(cfg);
  cfg_echo.erase("workers");  // execution environment, not part of the result
  summary["config"] = cfg_echo;
  summary["resolved_rates"] = {{"gamma_eg", rates.gamma_eg},
                               {"gamma_es", rates.gamma_es},
                               {"gamma_re", rates.gamma_re},
                               {"gamma_r", rates.gamma_r},
                               {"delta_e", rates.delta_e}};
  summary["peak_linewidth"] = cfg.peak_linewidth();

  Json runs = Json::array();
  std::vector<std::vector<double>> per_n_survival;

  for (int n : cfg.atoms) {
    TrajectorySetup setup = make_setup(cfg, n);
    std::uint64_t seed = detail::seed_for_n(cfg, n);
    std::string csv_path = cfg.output.dir + "/timeseries_N" +
                           std::to_string(n) + ".csv";

    Json run;
    run["n_atoms"] = n;
    run["base_seed"] = seed;
    run["geometry"] = detail::geometry_json(setup.geometry, cfg);

    if (cfg.mode == RunMode::Mcwf) {
      EnsembleResult ens = run_ensemble(setup, cfg.trajectories, seed,
                                        cfg.workers);
      detail::write_timeseries_csv(
          csv_path, ens.times, ens.mean_n.mean,
          {&ens.pop[0].mean, &ens.pop[1].mean, &ens.pop[2].mean,
           &ens.pop[3].mean},
          ens.double_rydberg.mean, &ens.mean_n.stderr_);
      run["trajectories"] = ens.m_trajectories;
      run["survival"] = ens.survival;
      run["survival_stderr"] = ens.survival_stderr;
      run["mean_jumps"] = ens.mean_jumps;
      double mean_n_final = 0.0;
      for (std::size_t k = 0; k < ens.survival.size(); ++k)
        mean_n_final += static_cast<double>(k) * ens.survival[k];
      run["mean_n_final"] = mean_n_final;
      per_n_survival.push_back(ens.survival);
      result.mcwf_by_n.emplace(n, std::move(ens));
    } else {
      MasterResult mr = integrate_lindblad(setup);
      detail::write_timeseries_csv(
          csv_path, mr.times, mr.mean_n,
          {&mr.pop[0], &mr.pop[1], &mr.pop[2], &mr.pop[3]}, mr.double_rydberg,
          nullptr);
      run["survival"] = mr.survival;
      run["max_trace_error"] = mr.max_trace_error;
      per_n_survival.push_back(mr.survival);
      result.master_by_n.emplace(n, std::move(mr));
    }
    run["timeseries_file"] = csv_path;
    runs.push_back(run);
    result.written_files.push_back(csv_path);
  }
  summary["runs"] = runs;

  // Poisson averaging over the initial atom number requires the sweep to
  // cover N = 1..N_max contiguously; N = 0 contributes the trivial P_0 = {1}.
  bool contiguous = true;
  for (std::size_t i = 0; i < cfg.atoms.size(); ++i)
    if (cfg.atoms[i] != static_cast<int>(i) + 1) contiguous = false;
  if (cfg.poisson.enabled && cfg.atoms.size() > 1 && contiguous) {
    std::vector<std::vector<double>> per_n;
    per_n.push_back({1.0});
    for (auto& s : per_n_survival) per_n.push_back(s);
    PoissonAveraged pa = poisson_average(per_n, cfg.poisson.mean_n);
    summary["poisson"] = {{"mean_n_init", cfg.poisson.mean_n},
                          {"p", pa.p},
                          {"mean_n", pa.mean_n},
                          {"truncated_weight", pa.truncated_weight},
                          {"renormalized", true}};
    result.poisson = pa;
  }

  std::string summary_path = cfg.output.dir + "/summary.json";
  {
    std::ofstream out(summary_path);
    if (!out)
      throw std::runtime_error("cannot open output file '" + summary_path +
                               "'");
    out << summary.dump(2) << '\n';
  }
  result.written_files.push_back(summary_path);
  result.summary = std::move(summary);
  return result;
}

// ---------------------------------------------------------------------------
// Preset calibration: coarse grid search over at most three pulse parameters
// at reduced statistics, maximizing the single-atom survival P_N(1).

struct CalibrationOutcome {
  RunConfig best;
  double best_p1 = -1.0;
  bool reached_target = false;
  Json record;
};

inline CalibrationOutcome calibrate_presets(const RunConfig& base) {
  const CalibrationConfig& cal = base.calibration;
  std::vector<double> peaks = cal.peaks.empty()
                                  ? std::vector<double>{base.pulse.omega_ge_peak}
                                  : cal.peaks;
  std::vector<double> deltas =
      cal.delta_es.empty() ? std::vector<double>{base.pulse.delta_e_level}
                           : cal.delta_es;
  std::vector<double> rises = cal.t_rises.empty()
                                  ? std::vector<double>{base.pulse.t_rise}
                                  : cal.t_rises;

  CalibrationOutcome out;
  out.record = Json::array();
  for (double peak : peaks)
    for (double delta : deltas)
      for (double rise : rises) {
        RunConfig trial = base;
        trial.atoms = {cal.n_atoms};
        trial.trajectories = cal.trajectories;
        trial.pulse.omega_ge_peak = peak;
        trial.pulse.delta_e_level = delta;
        trial.pulse.t_rise = rise;
        trial.validate();

        TrajectorySetup setup = make_setup(trial, cal.n_atoms);
        EnsembleResult ens = run_ensemble(setup, cal.trajectories,
                                          trial.base_seed, trial.workers);
        double p1 = ens.survival[1];
        out.record.push_back({{"omega_ge_peak", peak},
                              {"delta_e_level", delta},
                              {"t_rise", rise},
                              {"p1", p1},
                              {"p1_stderr", ens.survival_stderr[1]}});
        if (p1 > out.best_p1) {
          out.best_p1 = p1;
          out.best = trial;
          out.best.trajectories = base.trajectories;
          out.best.atoms = base.atoms;
        }
      }
  out.reached_target = out.best_p1 >= cal.target_p1 - 0.1;

  Json doc;
  doc["software_version"] = kVersion;
  doc["target_p1"] = cal.target_p1;
  doc["best_p1"] = out.best_p1;
  doc["reached_target"] = out.reached_target;
  doc["search"] = out.record;
  doc["config"] = to_json(out.best);
  std::filesystem::path path(cal.out_file);
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream f(cal.out_file);
  if (!f)
    throw std::runtime_error("cannot open calibration output '" +
                             cal.out_file + "'");
  f << doc.dump(2) << '\n';
  return out;
}

}  // namespace rfs
