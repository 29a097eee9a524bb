#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rfs/runner.hpp"
#include "rfs/version.hpp"

namespace {

std::vector<int> parse_sweep(const std::string& spec) {
  auto sep = spec.find("..");
  if (sep == std::string::npos)
    throw rfs::config_error("sweep", "expected the form A..B");
  int lo = std::stoi(spec.substr(0, sep));
  int hi = std::stoi(spec.substr(sep + 2));
  if (lo < 1 || hi < lo)
    throw rfs::config_error("sweep", "expected 1 <= A <= B");
  std::vector<int> atoms;
  for (int n = lo; n <= hi; ++n) atoms.push_back(n);
  return atoms;
}

void print_survival(const std::string& label, const std::vector<double>& p) {
  std::cout << label;
  for (std::size_t k = 0; k < p.size(); ++k)
    std::cout << "  P(" << k << ")=" << p[k];
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "rfs: single-atom filtering in Rydberg-blockaded ensembles "
      "(Monte Carlo wavefunction simulator)"};
  app.set_version_flag("--version", rfs::kVersion);

  std::string config_path, preset, mode, out_dir, sweep;
  int atoms = 0, workers = -1;
  long long trajectories = 0;
  unsigned long long seed = 0;
  double gamma_r = -1.0;
  bool calibrate = false;

  app.add_option("--config", config_path, "JSON run configuration file");
  app.add_option("--preset", preset,
                 "built-in scenario: fig2 (scheme A resonant), fig3 "
                 "(scheme A detuned) or fig4 (scheme B)");
  app.add_option("--atoms", atoms, "initial atom number (single run)");
  app.add_option("--sweep", sweep, "atom-number sweep A..B");
  app.add_option("--trajectories", trajectories, "trajectories per run");
  app.add_option("--seed", seed, "base random seed");
  app.add_option("--mode", mode, "mcwf | master");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads (0 = auto)");
  app.add_option("--gamma-r", gamma_r, "Rydberg dephasing rate override");
  app.add_flag("--calibrate", calibrate,
               "run the calibration grid search from the config's "
               "calibration block");

  CLI11_PARSE(app, argc, argv);

  try {
    rfs::RunConfig cfg;
    if (!preset.empty()) cfg = rfs::preset_by_name(preset);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in)
        throw rfs::config_error("config", "cannot read '" + config_path + "'");
      rfs::Json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& ex) {
        throw rfs::config_error("config", ex.what());
      }
      cfg = rfs::config_from_json(j);
    }
    if (atoms > 0) cfg.atoms = {atoms};
    if (!sweep.empty()) cfg.atoms = parse_sweep(sweep);
    if (trajectories > 0) cfg.trajectories = static_cast<int>(trajectories);
    if (seed > 0) cfg.base_seed = seed;
    if (!mode.empty()) {
      if (mode == "mcwf")
        cfg.mode = rfs::RunMode::Mcwf;
      else if (mode == "master")
        cfg.mode = rfs::RunMode::Master;
      else
        throw rfs::config_error("mode", "must be mcwf or master");
    }
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    if (workers >= 0) cfg.workers = workers;
    if (gamma_r >= 0.0) cfg.gamma_r = gamma_r;
    cfg.validate();

    if (calibrate) {
      rfs::CalibrationOutcome outcome = rfs::calibrate_presets(cfg);
      std::cout << "calibration: best P_" << cfg.calibration.n_atoms
                << "(1) = " << outcome.best_p1 << " (target "
                << cfg.calibration.target_p1 << "), preset written to "
                << cfg.calibration.out_file << '\n';
      if (!outcome.reached_target) {
        std::cerr << "calibration failed to reach the target; best point "
                     "recorded anyway\n";
        return 4;
      }
      return 0;
    }

    rfs::ExperimentResult res = rfs::run_experiment(cfg);
    for (int n : cfg.atoms) {
      if (cfg.mode == rfs::RunMode::Mcwf)
        print_survival("N=" + std::to_string(n) + " :",
                       res.mcwf_by_n.at(n).survival);
      else
        print_survival("N=" + std::to_string(n) + " (master):",
                       res.master_by_n.at(n).survival);
    }
    if (res.poisson)
      print_survival("Poisson(mean " + std::to_string(cfg.poisson.mean_n) +
                         ") :",
                     res.poisson->p);
    for (const auto& f : res.written_files) std::cout << "wrote " << f << '\n';
    return 0;
  } catch (const rfs::config_error& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return 2;
  } catch (const rfs::capacity_error& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return 2;
  } catch (const rfs::propagation_error& ex) {
    std::cerr << "propagation error: " << ex.what() << '\n';
    return 3;
  } catch (const rfs::calibration_failed& ex) {
    std::cerr << "calibration failed: " << ex.what() << '\n';
    return 4;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
}
