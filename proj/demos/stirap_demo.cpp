// Single-atom STIRAP round trip with all dissipation switched off: the atom
// rides the dark state |g> -> |r> -> |g> while |e> stays empty. Prints the
// level populations on a time grid as CSV.

#include <iostream>

#include "rfs/mcwf.hpp"

int main() {
  rfs::TrajectorySetup setup;
  setup.schedule.omega_er_level = 5.0;
  setup.schedule.omega_ge_peak = 30.0;
  setup.schedule.t_start_ge = 0.0;
  setup.schedule.t_rise = 5.0;
  setup.schedule.t_hold = 7.0;
  setup.schedule.t_fall = 5.0;
  setup.schedule.total_duration = 18.0;
  setup.rates = {};  // closed system
  setup.n_atoms = 1;
  setup.geometry = rfs::uniform_blockade_geometry(1, 0.0);
  setup.integrator =
      rfs::default_integrator_options(setup.schedule, setup.rates);
  for (int i = 0; i <= 200; ++i)
    setup.sample_times.push_back(setup.schedule.total_duration * i / 200.0);

  rfs::TrajectoryRecord rec = rfs::evolve_trajectory(setup, 1);
  std::cout << "t,omega_ge,pop_g,pop_s,pop_e,pop_r\n";
  for (std::size_t i = 0; i < setup.sample_times.size(); ++i) {
    double t = setup.sample_times[i];
    const auto& s = rec.samples[i];
    std::cout << t << ',' << setup.schedule.omega_ge(t) << ',' << s.pop[rfs::kG]
              << ',' << s.pop[rfs::kS] << ',' << s.pop[rfs::kE] << ','
              << s.pop[rfs::kR] << '\n';
  }
  return 0;
}
