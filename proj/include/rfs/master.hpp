#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "rfs/errors.hpp"
#include "rfs/integrator.hpp"
#include "rfs/mcwf.hpp"

namespace rfs {

inline constexpr int kMaxMasterAtoms = 3;

struct MasterResult {
  std::vector<double> times;
  std::vector<double> mean_n;
  std::array<std::vector<double>, 4> pop;  // per-atom-averaged populations
  std::vector<double> double_rydberg;
  std::vector<double> survival;            // P_N(n) at the final time
  std::vector<double> purity;              // Tr rho^2 at each sample time
  std::vector<Complex> rho_final;          // flat, entry (r,c) at r + dim*c
  double max_trace_error = 0.0;
  double max_herm_error = 0.0;
};

namespace detail {

// Right-hand side of the Lindblad equation, applied matrix-free:
//   drho/dt = -i[H, rho] - (1/2){L^2, rho} + sum_ch L rho L^dag.
// rho is stored flat, entry (r, c) at r + dim * c.
struct LindbladRhs {
  const TrajectorySetup* setup;
  EffectiveAction action;
  std::size_t dim;
  mutable std::vector<Complex> a, b, c;  // scratch, dim^2 each

  explicit LindbladRhs(const TrajectorySetup& s)
      : setup(&s),
        action(s.geometry, s.rates, s.schedule.omega_er_level,
               s.schedule.delta_e_level, s.n_atoms),
        dim(state_dim(s.n_atoms)) {
    a.resize(dim * dim);
    b.resize(dim * dim);
    c.resize(dim * dim);
  }

  void operator()(double t, std::span<const Complex> rho,
                  std::span<Complex> out) const {
    const double oge = setup->schedule.omega_ge(t);
    const int n = setup->n_atoms;
    const AtomRates& rt = setup->rates;
    const auto& l2 = action.l2_diag;

    // a = H rho, column by column
    for (std::size_t col = 0; col < dim; ++col)
      action.hamiltonian(oge, rho.subspan(col * dim, dim),
                         std::span<Complex>(a.data() + col * dim, dim));
    // b = rho^T (plain transpose; H is real symmetric, so rho H = (H b)^T)
    for (std::size_t col = 0; col < dim; ++col)
      for (std::size_t row = 0; row < dim; ++row)
        b[row + dim * col] = rho[col + dim * row];
    for (std::size_t col = 0; col < dim; ++col)
      action.hamiltonian(oge, std::span<const Complex>(b.data() + col * dim, dim),
                         std::span<Complex>(c.data() + col * dim, dim));

    const Complex mi(0.0, -1.0);
    for (std::size_t col = 0; col < dim; ++col)
      for (std::size_t row = 0; row < dim; ++row) {
        Complex comm = a[row + dim * col] - c[col + dim * row];
        out[row + dim * col] = mi * comm - 0.5 * (l2[row] + l2[col]) *
                                               rho[row + dim * col];
      }

    // Recycling terms L rho L^dag
    for (int j = 0; j < n; ++j) {
      const std::size_t step = std::size_t{1} << (2 * j);
      for (std::size_t col = 0; col < dim; ++col) {
        int dc = digit(col, j);
        for (std::size_t row = 0; row < dim; ++row) {
          int dr = digit(row, j);
          Complex v = rho[row + dim * col];
          if (dr == kE && dc == kE) {
            if (rt.gamma_eg > 0.0)
              out[(row - 2 * step) + dim * (col - 2 * step)] +=
                  rt.gamma_eg * v;
            if (rt.gamma_es > 0.0)
              out[(row - step) + dim * (col - step)] += rt.gamma_es * v;
          }
          if (dr == kR && dc == kR && rt.gamma_re > 0.0)
            out[(row - step) + dim * (col - step)] += rt.gamma_re * v;
          if (rt.gamma_r > 0.0) {
            double sign = (dr == kR) == (dc == kR) ? 1.0 : -1.0;
            out[row + dim * col] += rt.gamma_r * sign * v;
          }
        }
      }
    }
  }
};

}  // namespace detail

// Exact Lindblad integration for n <= 3, producing the same observable series
// as the trajectory ensemble (with zero statistical error). Trace and
// Hermiticity are checked after every accepted step.
inline MasterResult integrate_lindblad(const TrajectorySetup& setup) {
  setup.validate();
  if (setup.n_atoms > kMaxMasterAtoms)
    throw capacity_error("master-equation oracle supports n <= " +
                         std::to_string(kMaxMasterAtoms));
  const int n = setup.n_atoms;
  const std::size_t dim = state_dim(n);

  detail::LindbladRhs rhs(setup);
  std::vector<Complex> rho(dim * dim, Complex{});
  {
    std::size_t idx0 = 0;
    if (!setup.initial_levels.empty())
      for (int j = 0; j < n; ++j)
        idx0 |= static_cast<std::size_t>(setup.initial_levels[j]) << (2 * j);
    rho[idx0 + dim * idx0] = 1.0;
  }

  Dopri5 integ(
      [&rhs](double t, std::span<const Complex> y, std::span<Complex> dy) {
        rhs(t, y, dy);
      },
      setup.integrator);
  integ.start(0.0, std::move(rho));

  MasterResult res;
  res.times = setup.sample_times;

  auto check_state = [&](std::span<const Complex> r, double t) {
    double tr = 0.0;
    for (std::size_t i = 0; i < dim; ++i) tr += r[i + dim * i].real();
    double trace_err = std::abs(tr - 1.0);
    double herm_err = 0.0;
    for (std::size_t col = 0; col < dim; ++col)
      for (std::size_t row = 0; row <= col; ++row)
        herm_err = std::max(
            herm_err,
            std::abs(r[row + dim * col] - std::conj(r[col + dim * row])));
    res.max_trace_error = std::max(res.max_trace_error, trace_err);
    res.max_herm_error = std::max(res.max_herm_error, herm_err);
    if (trace_err > 1e-8)
      throw propagation_error(t, "density-matrix trace drifted by " +
                                     std::to_string(trace_err));
    if (herm_err > 1e-10)
      throw propagation_error(t, "density matrix lost Hermiticity");
  };

  for (std::size_t gi = 0; gi < setup.sample_times.size(); ++gi) {
    const double target = setup.sample_times[gi];
    while (integ.t() < target) {
      integ.step_to(target);
      check_state(integ.y(), integ.t());
    }

    const auto& r = integ.y();
    std::array<double, 4> pop{};
    double mean_n = 0.0, dryd = 0.0, purity = 0.0;
    std::vector<double> survival(static_cast<std::size_t>(n) + 1, 0.0);
    for (std::size_t idx = 0; idx < dim; ++idx) {
      double p = r[idx + dim * idx].real();
      int rc = 0, sc = 0;
      for (int j = 0; j < n; ++j) {
        int d = digit(idx, j);
        pop[d] += p;
        rc += (d == kR);
        sc += (d == kS);
      }
      dryd += p * (rc * (rc - 1)) / 2.0;
      survival[static_cast<std::size_t>(n - sc)] += p;
    }
    for (const auto& v : r) purity += std::norm(v);
    mean_n = n - pop[kS];
    for (auto& v : pop) v /= n;

    res.mean_n.push_back(mean_n);
    for (int d = 0; d < 4; ++d) res.pop[d].push_back(pop[d]);
    res.double_rydberg.push_back(dryd);
    res.purity.push_back(purity);
    if (gi + 1 == setup.sample_times.size()) {
      res.survival = survival;
      res.rho_final.assign(r.begin(), r.end());
    }
  }
  return res;
}

}  // namespace rfs
