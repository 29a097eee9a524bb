#pragma once

#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rfs/atom_model.hpp"
#include "rfs/basis.hpp"
#include "rfs/geometry.hpp"

namespace rfs {

using Complex = std::complex<double>;

// Dissipation channels, one set per atom.
enum class Channel { Ge, Se, Er, Dephase };

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Ge: return "ge";
    case Channel::Se: return "se";
    case Channel::Er: return "er";
    case Channel::Dephase: return "r";
  }
  return "?";
}

// Linear operator on the 4^N state space with a matrix-free apply rule.
struct ManyBodyOperator {
  std::size_t dimension = 0;
  bool hermitian = false;
  std::function<void(std::span<const Complex>, std::span<Complex>)> apply_fn;

  void apply(std::span<const Complex> in, std::span<Complex> out) const {
    if (in.size() != dimension || out.size() != dimension)
      throw std::invalid_argument("operator/state dimension mismatch");
    apply_fn(in, out);
  }

  std::vector<Complex> operator()(const std::vector<Complex>& in) const {
    std::vector<Complex> out(dimension);
    apply(in, out);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Diagonal pieces

// Diagonal of the damping operator
//   L^2 = sum_j [(G_eg + G_es) s_ee^j + G_re s_rr^j + g_r 1^j].
// The identity term is included literally, so n_atoms * gamma_r sits on every
// entry. `n_identity_atoms` lets callers account for atoms that are frozen in
// |s> and no longer span the state space but still carry their dephasing
// generator (defaults to n_atoms).
inline std::vector<double> damping_diagonal(const AtomRates& rates, int n_atoms,
                                            int n_identity_atoms = -1) {
  if (n_atoms < 0) throw std::domain_error("damping_diagonal: n must be >= 0");
  rates.validate();
  if (n_identity_atoms < 0) n_identity_atoms = n_atoms;
  std::size_t dim = state_dim(n_atoms);
  double ge_tot = rates.gamma_e_total();
  std::vector<double> diag(dim, rates.gamma_r * n_identity_atoms);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    double v = 0.0;
    for (int j = 0; j < n_atoms; ++j) {
      int d = digit(idx, j);
      if (d == kE)
        v += ge_tot;
      else if (d == kR)
        v += rates.gamma_re;
    }
    diag[idx] += v;
  }
  return diag;
}

// Diagonal of the Hermitian Hamiltonian: detuning on each |e> plus the van der
// Waals shift of every doubly-Rydberg pair.
inline std::vector<double> hamiltonian_diagonal(const EnsembleGeometry& geom,
                                                double delta_e, int n_atoms) {
  std::size_t dim = state_dim(n_atoms);
  std::vector<double> diag(dim, 0.0);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    double v = 0.0;
    for (int i = 0; i < n_atoms; ++i) {
      int d = digit(idx, i);
      if (d == kE) v += delta_e;
      if (d == kR)
        for (int j = i + 1; j < n_atoms; ++j)
          if (digit(idx, j) == kR) v += geom.shift(i, j);
    }
    diag[idx] = v;
  }
  return diag;
}

// ---------------------------------------------------------------------------
// Fused effective-Hamiltonian action for the trajectory engine.
//
// d/dt psi = -i H psi - (1/2) L^2 psi with
//   H = sum_j [de s_ee + W_ge(t)(s_eg + s_ge) + W_er(s_re + s_er)]
//       + sum_{i<j} Delta_ij s_rr s_rr.
// Everything except the scalar W_ge(t) is baked into precomputed diagonals;
// the off-diagonal pattern is generated from the base-4 digit structure on
// the fly.
struct EffectiveAction {
  int n_atoms = 0;
  std::size_t dim = 0;
  double omega_er = 0.0;
  std::vector<Complex> diag;     // -i * H_diag - L2_diag / 2
  std::vector<double> l2_diag;   // kept for jump-rate diagnostics

  EffectiveAction() = default;

  EffectiveAction(const EnsembleGeometry& geom, const AtomRates& rates,
                  double omega_er_level, double delta_e, int n,
                  int n_identity_atoms = -1)
      : n_atoms(n), dim(state_dim(n)), omega_er(omega_er_level) {
    auto h_diag = hamiltonian_diagonal(geom, delta_e, n);
    l2_diag = damping_diagonal(rates, n, n_identity_atoms);
    diag.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
      diag[i] = Complex(-0.5 * l2_diag[i], -h_diag[i]);
  }

  // out = -i H(omega_ge) psi - (1/2) L^2 psi
  void deriv(double omega_ge, std::span<const Complex> psi,
             std::span<Complex> out) const {
    const Complex cge(0.0, -omega_ge);
    const Complex cer(0.0, -omega_er);
    const Complex* p = psi.data();
    Complex* o = out.data();
    const Complex* dg = diag.data();
    const int n = n_atoms;
    for (std::size_t idx = 0; idx < dim; ++idx) {
      Complex acc = dg[idx] * p[idx];
      for (int j = 0; j < n; ++j) {
        const std::size_t step = std::size_t{1} << (2 * j);
        switch ((idx >> (2 * j)) & 3u) {
          case kG: acc += cge * p[idx + 2 * step]; break;
          case kE: acc += cge * p[idx - 2 * step] + cer * p[idx + step]; break;
          case kR: acc += cer * p[idx - step]; break;
          default: break;  // |s> is decoupled
        }
      }
      o[idx] = acc;
    }
  }

  // Hermitian Hamiltonian action alone: out = H psi (no damping, real
  // coefficients). Used by the master-equation oracle.
  void hamiltonian(double omega_ge, std::span<const Complex> psi,
                   std::span<Complex> out) const {
    const int n = n_atoms;
    for (std::size_t idx = 0; idx < dim; ++idx) {
      // H_diag = i * (diag + l2/2) by construction; recover the real value.
      double h_d = -(diag[idx].imag());
      Complex acc = h_d * psi[idx];
      for (int j = 0; j < n; ++j) {
        const std::size_t step = std::size_t{1} << (2 * j);
        switch ((idx >> (2 * j)) & 3u) {
          case kG: acc += omega_ge * psi[idx + 2 * step]; break;
          case kE:
            acc += omega_ge * psi[idx - 2 * step] + omega_er * psi[idx + step];
            break;
          case kR: acc += omega_er * psi[idx - step]; break;
          default: break;
        }
      }
      out[idx] = acc;
    }
  }
};

// ---------------------------------------------------------------------------
// Contract-level operator builders

// Hermitian many-body Hamiltonian at fixed drive amplitudes.
inline ManyBodyOperator make_hamiltonian(double omega_ge, double omega_er,
                                         double delta_e,
                                         const EnsembleGeometry& geom,
                                         int n_atoms) {
  if (n_atoms < 1) throw std::domain_error("hamiltonian needs n >= 1");
  std::size_t dim = state_dim(n_atoms);
  auto h_diag = hamiltonian_diagonal(geom, delta_e, n_atoms);
  ManyBodyOperator op;
  op.dimension = dim;
  op.hermitian = true;
  op.apply_fn = [h_diag = std::move(h_diag), omega_ge, omega_er, n_atoms,
                 dim](std::span<const Complex> in, std::span<Complex> out) {
    for (std::size_t idx = 0; idx < dim; ++idx) {
      Complex acc = h_diag[idx] * in[idx];
      for (int j = 0; j < n_atoms; ++j) {
        const std::size_t step = std::size_t{1} << (2 * j);
        switch ((idx >> (2 * j)) & 3u) {
          case kG: acc += omega_ge * in[idx + 2 * step]; break;
          case kE:
            acc += omega_ge * in[idx - 2 * step] + omega_er * in[idx + step];
            break;
          case kR: acc += omega_er * in[idx - step]; break;
          default: break;
        }
      }
      out[idx] = acc;
    }
  };
  return op;
}

// Single-atom transition operator sqrt(rate) |to><from| on atom `atom`.
inline ManyBodyOperator make_transition(double rate, int atom, int from_level,
                                        int to_level, int n_atoms) {
  std::size_t dim = state_dim(n_atoms);
  double amp = std::sqrt(rate);
  ManyBodyOperator op;
  op.dimension = dim;
  op.hermitian = false;
  op.apply_fn = [amp, atom, from_level, to_level, n_atoms,
                 dim](std::span<const Complex> in, std::span<Complex> out) {
    for (std::size_t idx = 0; idx < dim; ++idx) out[idx] = 0.0;
    for (std::size_t idx = 0; idx < dim; ++idx)
      if (digit(idx, atom) == from_level)
        out[with_digit(idx, atom, to_level)] = amp * in[idx];
  };
  return op;
}

// Dephasing generator sqrt(gamma_r) (2 s_rr^j - 1^j): sign flip on every
// component where atom j is not in |r>.
inline ManyBodyOperator make_dephasing(double gamma_r, int atom, int n_atoms) {
  std::size_t dim = state_dim(n_atoms);
  double amp = std::sqrt(gamma_r);
  ManyBodyOperator op;
  op.dimension = dim;
  op.hermitian = true;
  op.apply_fn = [amp, atom, dim](std::span<const Complex> in,
                                 std::span<Complex> out) {
    for (std::size_t idx = 0; idx < dim; ++idx)
      out[idx] = (digit(idx, atom) == kR ? amp : -amp) * in[idx];
  };
  return op;
}

struct JumpOperator {
  ManyBodyOperator op;
  int atom;
  Channel channel;
  double rate;
};

// The Lindblad generators L_ge, L_se, L_er and L_r for every atom. Channels
// with zero rate are omitted.
inline std::vector<JumpOperator> build_jump_operators(const AtomRates& rates,
                                                      int n_atoms) {
  if (n_atoms < 1) throw std::domain_error("jump operators need n >= 1");
  rates.validate();
  std::vector<JumpOperator> ops;
  for (int j = 0; j < n_atoms; ++j) {
    if (rates.gamma_eg > 0.0)
      ops.push_back({make_transition(rates.gamma_eg, j, kE, kG, n_atoms), j,
                     Channel::Ge, rates.gamma_eg});
    if (rates.gamma_es > 0.0)
      ops.push_back({make_transition(rates.gamma_es, j, kE, kS, n_atoms), j,
                     Channel::Se, rates.gamma_es});
    if (rates.gamma_re > 0.0)
      ops.push_back({make_transition(rates.gamma_re, j, kR, kE, n_atoms), j,
                     Channel::Er, rates.gamma_re});
    if (rates.gamma_r > 0.0)
      ops.push_back({make_dephasing(rates.gamma_r, j, n_atoms), j,
                     Channel::Dephase, rates.gamma_r});
  }
  return ops;
}

// Diagonal damping operator L^2 (the non-Hermitian part of the effective
// Hamiltonian), equal to sum_j sum_channels L^dag L.
inline ManyBodyOperator build_damping(const AtomRates& rates, int n_atoms) {
  if (n_atoms < 1) throw std::domain_error("damping needs n >= 1");
  auto diag = damping_diagonal(rates, n_atoms);
  ManyBodyOperator op;
  op.dimension = diag.size();
  op.hermitian = true;
  op.apply_fn = [diag = std::move(diag)](std::span<const Complex> in,
                                         std::span<Complex> out) {
    for (std::size_t idx = 0; idx < in.size(); ++idx)
      out[idx] = diag[idx] * in[idx];
  };
  return op;
}

// psi_dot = -i H psi - (1/2) L^2 psi  (hbar = 1).
inline std::vector<Complex> apply_effective_hamiltonian(
    const ManyBodyOperator& h, const ManyBodyOperator& l2,
    const std::vector<Complex>& psi) {
  if (h.dimension != psi.size() || l2.dimension != psi.size())
    throw std::invalid_argument(
        "apply_effective_hamiltonian: dimension mismatch");
  std::vector<Complex> h_psi = h(psi);
  std::vector<Complex> l2_psi = l2(psi);
  std::vector<Complex> out(psi.size());
  const Complex mi(0.0, -1.0);
  for (std::size_t i = 0; i < psi.size(); ++i)
    out[i] = mi * h_psi[i] - 0.5 * l2_psi[i];
  return out;
}

}  // namespace rfs
