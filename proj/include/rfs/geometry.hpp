#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfs/errors.hpp"
#include "rfs/rng.hpp"

namespace rfs {

// Default van der Waals coefficient, 1/us * um^6. Not a measured number: it is
// the calibrated value for which every pair inside a 2 um cube is shifted by
// at least 10 excitation linewidths at the preset drive parameters
// (w_max ~ 20/us, worst-case pair distance 2*sqrt(3) um needs C6 >~ 3.5e5).
inline constexpr double kDefaultC6 = 4.0e5;

// Pair shifts are capped here; a pair detuned by 10^6/us is blockade-saturated
// the same way a pair at 10^9/us would be, and the cap keeps the stiffness of
// the integration bounded when sampled positions come close.
inline constexpr double kDeltaCap = 1.0e6;

inline constexpr double kDefaultMinSeparation = 0.2;  // um
inline constexpr int kMaxSamplingRounds = 10000;

// Atom positions and the pairwise Rydberg interaction matrix
// Delta(d_ij) = C6 / d_ij^6 (capped at kDeltaCap), zero diagonal.
struct EnsembleGeometry {
  int n_atoms = 0;
  std::vector<std::array<double, 3>> positions;  // empty in uniform mode
  double c6 = 0.0;
  std::vector<double> pair_shifts;  // n x n row-major, symmetric
  std::uint64_t sample_seed = 0;    // seed used by sample_positions, else 0

  double shift(int i, int j) const {
    return pair_shifts[static_cast<std::size_t>(i) * n_atoms + j];
  }

  // Sub-geometry on a subset of atoms, preserving their pairwise shifts.
  EnsembleGeometry restricted(const std::vector<int>& atoms) const {
    EnsembleGeometry out;
    out.n_atoms = static_cast<int>(atoms.size());
    out.c6 = c6;
    out.sample_seed = sample_seed;
    if (!positions.empty()) {
      for (int a : atoms) out.positions.push_back(positions[a]);
    }
    out.pair_shifts.assign(static_cast<std::size_t>(out.n_atoms) * out.n_atoms,
                           0.0);
    for (int i = 0; i < out.n_atoms; ++i)
      for (int j = 0; j < out.n_atoms; ++j)
        if (i != j)
          out.pair_shifts[static_cast<std::size_t>(i) * out.n_atoms + j] =
              shift(atoms[i], atoms[j]);
    return out;
  }
};

inline double pair_distance(const std::array<double, 3>& a,
                            const std::array<double, 3>& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double vdw_shift(double c6, double distance) {
  double d6 = std::pow(distance, 6);
  double s = c6 / d6;
  return s < kDeltaCap ? s : kDeltaCap;
}

namespace detail {
inline void fill_pair_shifts(EnsembleGeometry& g) {
  int n = g.n_atoms;
  g.pair_shifts.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double s = vdw_shift(g.c6, pair_distance(g.positions[i], g.positions[j]));
      g.pair_shifts[static_cast<std::size_t>(i) * n + j] = s;
      g.pair_shifts[static_cast<std::size_t>(j) * n + i] = s;
    }
}
}  // namespace detail

// Draws n positions uniformly in a cube of side box_side (um), rejecting whole
// configurations until every pair is at least min_separation apart.
inline EnsembleGeometry sample_positions(int n, double box_side,
                                         double min_separation, Rng& rng,
                                         double c6 = kDefaultC6,
                                         std::uint64_t seed_label = 0) {
  if (n < 0) throw std::domain_error("sample_positions: n must be >= 0");
  if (!(box_side > 0.0))
    throw std::domain_error("sample_positions: box_side must be > 0");
  if (!(min_separation >= 0.0) || !std::isfinite(min_separation))
    throw std::domain_error("sample_positions: min_separation must be >= 0");

  EnsembleGeometry g;
  g.n_atoms = n;
  g.c6 = c6;
  g.sample_seed = seed_label;
  if (n == 0) return g;

  for (int round = 0; round < kMaxSamplingRounds; ++round) {
    g.positions.clear();
    for (int i = 0; i < n; ++i)
      g.positions.push_back({box_side * rng.uniform01(),
                             box_side * rng.uniform01(),
                             box_side * rng.uniform01()});
    bool ok = true;
    for (int i = 0; ok && i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (pair_distance(g.positions[i], g.positions[j]) < min_separation) {
          ok = false;
          break;
        }
    if (ok) {
      detail::fill_pair_shifts(g);
      return g;
    }
  }
  throw sampling_error("sample_positions: no admissible configuration after " +
                       std::to_string(kMaxSamplingRounds) +
                       " rounds (min_separation too large for the box?)");
}

// Distance at which the pair shift equals the excitation linewidth:
// d_b = (C6 / w_max)^(1/6).
inline double blockade_distance(double c6, double w_max) {
  if (!(c6 > 0.0) || !std::isfinite(c6))
    throw std::domain_error("blockade_distance: c6 must be > 0");
  if (!(w_max > 0.0) || !std::isfinite(w_max))
    throw std::domain_error("blockade_distance: w_max must be > 0");
  return std::pow(c6 / w_max, 1.0 / 6.0);
}

// Position-independent all-to-all interaction: every pair shifted by the same
// delta_uniform. Used for reproducible runs and as the figure-reproduction
// default.
inline EnsembleGeometry uniform_blockade_geometry(int n,
                                                  double delta_uniform) {
  if (n < 0)
    throw std::domain_error("uniform_blockade_geometry: n must be >= 0");
  if (!(delta_uniform >= 0.0) || !std::isfinite(delta_uniform))
    throw std::domain_error(
        "uniform_blockade_geometry: delta_uniform must be >= 0");
  EnsembleGeometry g;
  g.n_atoms = n;
  double s = delta_uniform < kDeltaCap ? delta_uniform : kDeltaCap;
  g.pair_shifts.assign(static_cast<std::size_t>(n) * n, s);
  for (int i = 0; i < n; ++i)
    g.pair_shifts[static_cast<std::size_t>(i) * n + i] = 0.0;
  return g;
}

}  // namespace rfs
