#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rfs/atom_model.hpp"
#include "rfs/geometry.hpp"
#include "rfs/integrator.hpp"
#include "rfs/observables.hpp"
#include "rfs/operators.hpp"
#include "rfs/pulses.hpp"
#include "rfs/rng.hpp"

namespace rfs {

struct JumpEvent {
  double t;
  int atom;        // original atom index
  Channel channel;
};

struct TrajectorySample {
  double mean_n = 0.0;              // trapped atoms <sum_j (1 - s_ss^j)>
  std::array<double, 4> pop{};      // per-atom-averaged level populations
  double double_rydberg = 0.0;      // sum_{i<j} <s_rr^i s_rr^j>
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<JumpEvent> jumps;
  std::vector<TrajectorySample> samples;            // one per sample time
  std::vector<double> survival;                     // P_N(n) at final sample
  std::vector<std::array<double, 4>> final_occupations;  // per original atom
};

struct TrajectorySetup {
  PulseSchedule schedule;
  EnsembleGeometry geometry;
  AtomRates rates;
  int n_atoms = 1;
  std::vector<double> sample_times;  // ascending, within [0, total_duration]
  bool prune = true;
  IntegratorOptions integrator;
  std::vector<int> initial_levels;   // empty -> all atoms in |g>

  void validate() const {
    schedule.validate();
    rates.validate();
    if (n_atoms < 1) throw std::domain_error("n_atoms must be >= 1");
    state_dim(n_atoms);  // capacity check
    if (geometry.n_atoms != n_atoms)
      throw std::invalid_argument("geometry/n_atoms mismatch");
    if (sample_times.empty())
      throw std::invalid_argument("sample_times must not be empty");
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
      double t = sample_times[i];
      if (!(t >= 0.0) || t > schedule.total_duration * (1 + 1e-12))
        throw std::invalid_argument("sample time outside schedule");
      if (i > 0 && t <= sample_times[i - 1])
        throw std::invalid_argument("sample times must be increasing");
    }
    if (!initial_levels.empty() &&
        initial_levels.size() != static_cast<std::size_t>(n_atoms))
      throw std::invalid_argument("initial_levels length mismatch");
  }
};

// Step-size ceiling tied to the fastest drive/decay scale of the problem so
// that no schedule feature can be skipped; the embedded error control
// resolves the (blockade-shifted) fast phases on top of this.
inline IntegratorOptions default_integrator_options(
    const PulseSchedule& schedule, const AtomRates& rates) {
  IntegratorOptions opts;
  double scale =
      std::max({rates.gamma_e_total(), schedule.omega_ge_peak,
                schedule.omega_er_level, std::abs(schedule.delta_e_level),
                1.0});
  opts.h_max = 0.02 / scale;
  if (schedule.t_rise > 0.0)
    opts.h_max = std::min(opts.h_max, schedule.t_rise / 8.0);
  if (schedule.t_fall > 0.0)
    opts.h_max = std::min(opts.h_max, schedule.t_fall / 8.0);
  return opts;
}

// Removes one atom that is sharply in |s> from the state, returning the
// 4^(n-1)-dimensional restriction (contract operation; the engine uses the
// same digit arithmetic inline).
inline std::vector<Complex> prune_atom(std::span<const Complex> psi,
                                       int n_atoms, int atom) {
  if (atom < 0 || atom >= n_atoms)
    throw std::invalid_argument("prune_atom: atom index out of range");
  std::size_t dim = state_dim(n_atoms);
  if (psi.size() != dim)
    throw std::invalid_argument("prune_atom: dimension mismatch");
  double off = 0.0, total = 0.0;
  for (std::size_t idx = 0; idx < dim; ++idx) {
    double w = std::norm(psi[idx]);
    total += w;
    if (digit(idx, atom) != kS) off += w;
  }
  if (total == 0.0 || off > 1e-12 * total)
    throw std::logic_error("prune_atom: atom is not sharply in |s>");
  std::size_t low_mask = (std::size_t{1} << (2 * atom)) - 1;
  std::vector<Complex> out(dim / 4);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::size_t lo = k & low_mask;
    std::size_t hi = (k & ~low_mask) << 2;
    out[k] = psi[lo | hi | (std::size_t{kS} << (2 * atom))];
  }
  return out;
}

namespace detail {

inline std::size_t insert_digit(std::size_t idx, int pos, int level) {
  std::size_t low_mask = (std::size_t{1} << (2 * pos)) - 1;
  std::size_t lo = idx & low_mask;
  std::size_t hi = (idx & ~low_mask) << 2;
  return lo | hi | (static_cast<std::size_t>(level) << (2 * pos));
}

inline double squared_norm(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& a : v) s += std::norm(a);
  return s;
}

// Mutable per-trajectory context; shrinks when atoms frozen in |s> are pruned.
struct TrajectoryContext {
  const TrajectorySetup* setup;
  std::vector<int> active;          // original indices of live atoms
  std::vector<bool> pruned;         // per original atom
  int n_pruned = 0;
  EffectiveAction action;

  explicit TrajectoryContext(const TrajectorySetup& s) : setup(&s) {
    active.resize(s.n_atoms);
    for (int j = 0; j < s.n_atoms; ++j) active[j] = j;
    pruned.assign(s.n_atoms, false);
    rebuild();
  }

  void rebuild() {
    EnsembleGeometry sub = setup->geometry.restricted(active);
    action = EffectiveAction(sub, setup->rates, setup->schedule.omega_er_level,
                             setup->schedule.delta_e_level,
                             static_cast<int>(active.size()),
                             setup->n_atoms);  // dephasing counts all atoms
  }

  void rhs(double t, std::span<const Complex> y, std::span<Complex> dy) const {
    action.deriv(setup->schedule.omega_ge(t), y, dy);
  }
};

struct LevelPopulations {
  std::vector<double> pop;  // n_active x 4, normalized
  double double_rydberg = 0.0;
};

inline LevelPopulations level_populations(std::span<const Complex> psi,
                                          int n_active, double norm2) {
  LevelPopulations out;
  out.pop.assign(static_cast<std::size_t>(n_active) * 4, 0.0);
  for (std::size_t idx = 0; idx < psi.size(); ++idx) {
    double w = std::norm(psi[idx]);
    if (w == 0.0) continue;
    int rc = 0;
    for (int k = 0; k < n_active; ++k) {
      int d = digit(idx, k);
      out.pop[static_cast<std::size_t>(k) * 4 + d] += w;
      rc += (d == kR);
    }
    out.double_rydberg += w * (rc * (rc - 1)) / 2.0;
  }
  for (auto& v : out.pop) v /= norm2;
  out.double_rydberg /= norm2;
  return out;
}

}  // namespace detail

// Propagates one stochastic trajectory: non-Hermitian evolution between
// norm-threshold quantum jumps, with the jump time located by bisection on
// the dense output of the bracketing step (relative tolerance 1e-6).
inline TrajectoryRecord evolve_trajectory(const TrajectorySetup& setup,
                                          std::uint64_t seed) {
  setup.validate();
  const int n = setup.n_atoms;
  Rng rng(seed);

  detail::TrajectoryContext ctx(setup);
  std::vector<Complex> psi(state_dim(n), Complex{});
  {
    std::size_t idx0 = 0;
    if (!setup.initial_levels.empty())
      for (int j = 0; j < n; ++j)
        idx0 |= static_cast<std::size_t>(setup.initial_levels[j]) << (2 * j);
    psi[idx0] = 1.0;
  }

  TrajectoryRecord rec;
  rec.seed = seed;
  rec.samples.reserve(setup.sample_times.size());

  auto make_integrator = [&ctx, &setup](double t0, std::vector<Complex> y0) {
    Dopri5 integ(
        [&ctx](double t, std::span<const Complex> y, std::span<Complex> dy) {
          ctx.rhs(t, y, dy);
        },
        setup.integrator);
    integ.start(t0, std::move(y0));
    return integ;
  };

  std::optional<Dopri5> integ(make_integrator(0.0, std::move(psi)));
  double threshold = rng.uniform01();
  double norm2_prev = 1.0;
  std::vector<Complex> work;

  auto locate_and_jump = [&]() {
    // Bisection for ||psi(theta)||^2 = threshold inside the last step.
    double lo = 0.0, hi = 1.0;
    double t0 = integ->t() - integ->last_step();
    while (hi - lo > 1e-6) {
      double mid = 0.5 * (lo + hi);
      integ->dense_eval(mid, work);
      if (detail::squared_norm(work) > threshold)
        lo = mid;
      else
        hi = mid;
    }
    double theta = 0.5 * (lo + hi);
    integ->dense_eval(theta, work);
    double t_jump = t0 + theta * integ->last_step();
    double norm2_jump = detail::squared_norm(work);

    // Channel weights <psi| L^dag L |psi> in canonical (atom, channel) order.
    const int n_active = static_cast<int>(ctx.active.size());
    std::vector<double> pop_e(n, 0.0), pop_r(n, 0.0);
    for (std::size_t idx = 0; idx < work.size(); ++idx) {
      double w = std::norm(work[idx]);
      if (w == 0.0) continue;
      for (int k = 0; k < n_active; ++k) {
        int d = digit(idx, k);
        if (d == kE)
          pop_e[ctx.active[k]] += w;
        else if (d == kR)
          pop_r[ctx.active[k]] += w;
      }
    }
    const AtomRates& rt = setup.rates;
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(n) * 4);
    for (int j = 0; j < n; ++j) {
      weights.push_back(rt.gamma_eg * pop_e[j]);
      weights.push_back(rt.gamma_es * pop_e[j]);
      weights.push_back(rt.gamma_re * pop_r[j]);
      weights.push_back(rt.gamma_r * norm2_jump);
    }
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0))
      throw propagation_error(t_jump, "jump triggered with zero total rate");

    double u = rng.uniform01() * total;
    std::size_t pick = 0, last_positive = 0;
    for (; pick + 1 < weights.size(); ++pick) {
      if (weights[pick] > 0.0) last_positive = pick;
      u -= weights[pick];
      if (u <= 0.0) break;
    }
    if (weights[pick] <= 0.0) pick = last_positive;  // rounding fallback
    int atom = static_cast<int>(pick / 4);
    Channel channel = static_cast<Channel>(pick % 4);
    rec.jumps.push_back({t_jump, atom, channel});

    // Apply L and renormalize. `work` holds the unnormalized pre-jump state.
    int k_pos = -1;
    if (!ctx.pruned[atom])
      k_pos = static_cast<int>(
          std::find(ctx.active.begin(), ctx.active.end(), atom) -
          ctx.active.begin());

    bool rebuilt = false;
    std::vector<Complex> next;
    switch (channel) {
      case Channel::Ge:
      case Channel::Er: {
        int from = channel == Channel::Ge ? kE : kR;
        int to = channel == Channel::Ge ? kG : kE;
        double w2 = channel == Channel::Ge ? pop_e[atom] : pop_r[atom];
        double inv = 1.0 / std::sqrt(w2);
        next.assign(work.size(), Complex{});
        for (std::size_t idx = 0; idx < work.size(); ++idx)
          if (digit(idx, k_pos) == from)
            next[with_digit(idx, k_pos, to)] = inv * work[idx];
        break;
      }
      case Channel::Se: {
        double inv = 1.0 / std::sqrt(pop_e[atom]);
        if (setup.prune) {
          // sigma_se projects atom k sharply into |s>; drop it from the
          // state space and keep the (renormalized) e-slice.
          next.resize(work.size() / 4);
          std::size_t low_mask = (std::size_t{1} << (2 * k_pos)) - 1;
          for (std::size_t idx = 0; idx < next.size(); ++idx) {
            std::size_t lo = idx & low_mask;
            std::size_t hi = (idx & ~low_mask) << 2;
            next[idx] = inv * work[lo | hi | (std::size_t{kE} << (2 * k_pos))];
          }
          ctx.pruned[atom] = true;
          ctx.n_pruned += 1;
          ctx.active.erase(ctx.active.begin() + k_pos);
          ctx.rebuild();
          rebuilt = true;
        } else {
          next.assign(work.size(), Complex{});
          for (std::size_t idx = 0; idx < work.size(); ++idx)
            if (digit(idx, k_pos) == kE)
              next[with_digit(idx, k_pos, kS)] = inv * work[idx];
        }
        break;
      }
      case Channel::Dephase: {
        double inv = 1.0 / std::sqrt(norm2_jump);
        next.resize(work.size());
        if (k_pos >= 0) {
          for (std::size_t idx = 0; idx < work.size(); ++idx)
            next[idx] = (digit(idx, k_pos) == kR ? inv : -inv) * work[idx];
        } else {
          // Frozen |s> atom: (2 s_rr - 1) acts as an overall sign.
          for (std::size_t idx = 0; idx < work.size(); ++idx)
            next[idx] = -inv * work[idx];
        }
        break;
      }
    }

    threshold = rng.uniform01();
    norm2_prev = 1.0;
    if (rebuilt)
      integ.emplace(make_integrator(t_jump, std::move(next)));
    else
      integ->restart(t_jump, std::move(next));
  };

  for (std::size_t gi = 0; gi < setup.sample_times.size(); ++gi) {
    const double target = setup.sample_times[gi];
    const bool is_final = gi + 1 == setup.sample_times.size();
    while (integ->t() < target) {
      integ->step_to(target);
      double norm2 = detail::squared_norm(integ->y());
      if (norm2 > norm2_prev * (1.0 + 1e-7) + 1e-14)
        throw propagation_error(
            integ->t(), "norm increased between jumps (" +
                            std::to_string(norm2_prev) + " -> " +
                            std::to_string(norm2) + ")");
      if (norm2 <= threshold) {
        locate_and_jump();
        continue;
      }
      norm2_prev = norm2;
    }

    // Sample observables from the normalized state.
    const auto& y = integ->y();
    double norm2 = detail::squared_norm(y);
    int n_active = static_cast<int>(ctx.active.size());
    auto lp = detail::level_populations(y, n_active, norm2);
    TrajectorySample s;
    for (int k = 0; k < n_active; ++k)
      for (int d = 0; d < 4; ++d)
        s.pop[d] += lp.pop[static_cast<std::size_t>(k) * 4 + d];
    s.pop[kS] += ctx.n_pruned;
    s.mean_n = n - s.pop[kS];
    for (int d = 0; d < 4; ++d) s.pop[d] /= n;
    s.double_rydberg = lp.double_rydberg;
    rec.samples.push_back(s);

    if (is_final) {
      // Final-state classification and survival distribution.
      std::vector<Complex> bar(y.size());
      double inv = 1.0 / std::sqrt(norm2);
      for (std::size_t i = 0; i < y.size(); ++i) bar[i] = inv * y[i];
      auto dist_active = survival_distribution(bar, n_active);
      rec.survival.assign(static_cast<std::size_t>(n) + 1, 0.0);
      for (std::size_t k = 0; k < dist_active.size(); ++k)
        rec.survival[k] = dist_active[k];
      rec.final_occupations.assign(static_cast<std::size_t>(n),
                                   {0.0, 1.0, 0.0, 0.0});
      for (int k = 0; k < n_active; ++k) {
        auto& occ = rec.final_occupations[ctx.active[k]];
        for (int d = 0; d < 4; ++d)
          occ[d] = lp.pop[static_cast<std::size_t>(k) * 4 + d];
      }
    }
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Seeded parallel ensembles

struct SeriesStat {
  std::vector<double> mean;
  std::vector<double> stderr_;
};

struct EnsembleResult {
  int m_trajectories = 0;
  std::vector<double> times;
  SeriesStat mean_n;
  std::array<SeriesStat, 4> pop;
  SeriesStat double_rydberg;
  std::vector<double> survival;         // P_N(n) at final time
  std::vector<double> survival_stderr;
  double mean_jumps = 0.0;
};

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RFS_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs M trajectories with seeds base_seed + m. Each trajectory's random
// stream is fixed by its seed alone and the reduction is done in trajectory
// order, so the result is bitwise independent of the worker count.
inline EnsembleResult run_ensemble(const TrajectorySetup& setup, int m_count,
                                   std::uint64_t base_seed, int workers = 0) {
  setup.validate();
  if (m_count < 1) throw std::invalid_argument("ensemble needs M >= 1");
  int n_workers = std::min(resolve_workers(workers), m_count);

  std::vector<TrajectoryRecord> records(static_cast<std::size_t>(m_count));
  std::atomic<std::size_t> cursor{0};
  std::mutex fail_mutex;
  std::vector<std::pair<std::uint64_t, std::string>> failures;

  auto worker = [&]() {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= records.size()) return;
      try {
        records[i] = evolve_trajectory(setup, base_seed + i);
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        failures.emplace_back(base_seed + i, ex.what());
      }
    }
  };

  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (!failures.empty()) {
    auto worst = *std::min_element(failures.begin(), failures.end());
    throw propagation_error(
        0.0, "trajectory with seed " + std::to_string(worst.first) +
                 " failed: " + worst.second + " (" +
                 std::to_string(failures.size()) + " failed in total)");
  }

  // Order-independent reduction: plain loops over trajectory index.
  const std::size_t n_grid = setup.sample_times.size();
  const double m = static_cast<double>(m_count);
  EnsembleResult result;
  result.m_trajectories = m_count;
  result.times = setup.sample_times;

  auto reduce_series = [&](auto&& get) {
    SeriesStat s;
    s.mean.assign(n_grid, 0.0);
    s.stderr_.assign(n_grid, 0.0);
    for (std::size_t g = 0; g < n_grid; ++g) {
      double sum = 0.0;
      for (const auto& r : records) sum += get(r, g);
      double mean = sum / m;
      s.mean[g] = mean;
      if (m_count > 1) {
        double ss = 0.0;
        for (const auto& r : records) {
          double d = get(r, g) - mean;
          ss += d * d;
        }
        s.stderr_[g] = std::sqrt(ss / (m * (m - 1.0)));
      }
    }
    return s;
  };

  result.mean_n = reduce_series(
      [](const TrajectoryRecord& r, std::size_t g) { return r.samples[g].mean_n; });
  for (int d = 0; d < 4; ++d)
    result.pop[d] = reduce_series([d](const TrajectoryRecord& r, std::size_t g) {
      return r.samples[g].pop[d];
    });
  result.double_rydberg = reduce_series([](const TrajectoryRecord& r,
                                           std::size_t g) {
    return r.samples[g].double_rydberg;
  });

  std::size_t n_surv = static_cast<std::size_t>(setup.n_atoms) + 1;
  result.survival.assign(n_surv, 0.0);
  result.survival_stderr.assign(n_surv, 0.0);
  for (std::size_t k = 0; k < n_surv; ++k) {
    double sum = 0.0;
    for (const auto& r : records) sum += r.survival[k];
    double mean = sum / m;
    result.survival[k] = mean;
    if (m_count > 1) {
      double ss = 0.0;
      for (const auto& r : records) {
        double d = r.survival[k] - mean;
        ss += d * d;
      }
      result.survival_stderr[k] = std::sqrt(ss / (m * (m - 1.0)));
    }
  }
  double jumps = 0.0;
  for (const auto& r : records) jumps += static_cast<double>(r.jumps.size());
  result.mean_jumps = jumps / m;
  return result;
}

}  // namespace rfs
