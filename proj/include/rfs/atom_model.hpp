#pragma once

#include <array>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <utility>

namespace rfs {

// All rates and Rabi frequencies are in 1/us (so a quoted "36 MHz" decay rate
// enters as 36), detunings in rad/us, times in us, hbar = 1 throughout.

namespace detail {
inline void require_finite(double x, const char* name) {
  if (!std::isfinite(x))
    throw std::domain_error(std::string(name) + " must be finite");
}
inline void require_nonneg(double x, const char* name) {
  require_finite(x, name);
  if (x < 0.0) throw std::domain_error(std::string(name) + " must be >= 0");
}
}  // namespace detail

// Single-atom decay, dephasing and detuning parameters.
struct AtomRates {
  double gamma_eg = 0.0;  // |e> -> |g> decay, 1/us
  double gamma_es = 0.0;  // |e> -> |s> decay (untrapped), 1/us
  double gamma_re = 0.0;  // |r> -> |e> decay, 1/us
  double gamma_r = 0.0;   // |r> dephasing, 1/us
  double delta_e = 0.0;   // detuning of |e>, rad/us

  double gamma_e_total() const { return gamma_eg + gamma_es; }

  void validate() const {
    detail::require_nonneg(gamma_eg, "gamma_eg");
    detail::require_nonneg(gamma_es, "gamma_es");
    detail::require_nonneg(gamma_re, "gamma_re");
    detail::require_nonneg(gamma_r, "gamma_r");
    detail::require_finite(delta_e, "delta_e");
  }
};

// Decay rates opened by a weak microwave coupling of |e> to a lossy auxiliary
// state |e'> (adiabatically eliminated):
//   gamma_es = 8|W|^2 / (3 gamma_e')    (to untrapped states)
//   gamma_eg = gamma_e + 4|W|^2 / gamma_e'
// Valid for |W| well below gamma_e'/2; outside that range the rates are still
// returned but a warning is emitted.
inline std::pair<double, double> engineered_rates(double omega_ee_prime,
                                                  double gamma_e_prime,
                                                  double gamma_e_bare) {
  detail::require_nonneg(omega_ee_prime, "omega_ee_prime");
  detail::require_nonneg(gamma_e_bare, "gamma_e_bare");
  detail::require_finite(gamma_e_prime, "gamma_e_prime");
  if (gamma_e_prime <= 0.0)
    throw std::domain_error("gamma_e_prime must be > 0");
  if (omega_ee_prime >= 0.5 * gamma_e_prime) {
    std::cerr << "rfs: warning: omega_ee_prime = " << omega_ee_prime
              << " is not small compared to gamma_e_prime/2 = "
              << 0.5 * gamma_e_prime
              << "; adiabatic elimination is inaccurate here\n";
  }
  double w2 = omega_ee_prime * omega_ee_prime;
  double gamma_es = 8.0 * w2 / (3.0 * gamma_e_prime);
  double gamma_eg = gamma_e_bare + 4.0 * w2 / gamma_e_prime;
  return {gamma_eg, gamma_es};
}

enum class Scheme { A, B };

// Level-scheme presets. Scheme A: open intermediate state with branching
// ratio 1 (gamma_eg = gamma_es = gamma_e/2, gamma_e = 36/us). Scheme B:
// closed transition (gamma_e = 38/us to |g> only) plus a microwave-engineered
// weak channel to |s>.
struct SchemeConfig {
  Scheme variant = Scheme::A;
  // Scheme B parameters. The default microwave Rabi frequency is the value
  // that gives gamma_es = 2.4/us with gamma_e_prime = 36/us.
  double gamma_e_bare = 38.0;
  double omega_ee_prime = 5.692099788303083;
  double gamma_e_prime = 36.0;

  std::pair<double, double> branching_rates() const {
    if (variant == Scheme::A) return {18.0, 18.0};
    return engineered_rates(omega_ee_prime, gamma_e_prime, gamma_e_bare);
  }
};

// Two-photon excitation linewidth of the Rydberg state,
//   w = (W_ge^2 + W_er^2) / sqrt(2 W_ge^2 + gamma_e^2/4).
inline double excitation_linewidth(double omega_ge, double omega_er,
                                   double gamma_e_total) {
  detail::require_nonneg(omega_ge, "omega_ge");
  detail::require_nonneg(omega_er, "omega_er");
  detail::require_nonneg(gamma_e_total, "gamma_e_total");
  double denom2 = 2.0 * omega_ge * omega_ge +
                  0.25 * gamma_e_total * gamma_e_total;
  if (denom2 <= 0.0) {
    if (omega_ge == 0.0 && omega_er == 0.0) return 0.0;  // no drive at all
    throw std::domain_error("excitation linewidth denominator vanishes");
  }
  return (omega_ge * omega_ge + omega_er * omega_er) / std::sqrt(denom2);
}

// Eigensystem of the single-atom driven three-level block {g, e, r}:
//   lambda_0 = 0,  lambda_pm = delta_e/2 +- sqrt(W_ge^2 + W_er^2 + delta_e^2/4)
// with the zero-energy dark state  psi_0 = (W_er |g> - W_ge |r>)/w0.
struct LambdaEigensystem {
  double lambda_0;      // identically zero
  double lambda_plus;
  double lambda_minus;
  std::array<double, 3> dark_state;  // coefficients on (|g>, |e>, |r>)
};

inline LambdaEigensystem lambda_eigensystem(double omega_ge, double omega_er,
                                            double delta_e) {
  detail::require_nonneg(omega_ge, "omega_ge");
  detail::require_nonneg(omega_er, "omega_er");
  detail::require_finite(delta_e, "delta_e");
  double w0_sq = omega_ge * omega_ge + omega_er * omega_er;
  if (w0_sq == 0.0)
    throw std::domain_error(
        "degenerate eigensystem: both Rabi frequencies vanish");
  double half = 0.5 * delta_e;
  double root = std::sqrt(w0_sq + half * half);
  double w0 = std::sqrt(w0_sq);
  return {0.0, half + root, half - root,
          {omega_er / w0, 0.0, -omega_ge / w0}};
}

// Probability of losing the last remaining (Rydberg) atom when a quantum jump
// projects it outside the dark state:
//   Gamma_es W_er^2 / ((Gamma_es + Gamma_eg)(W_ge^2 + W_er^2)).
inline double last_atom_loss_estimate(double gamma_es, double gamma_eg,
                                      double omega_ge, double omega_er) {
  detail::require_nonneg(gamma_es, "gamma_es");
  detail::require_nonneg(gamma_eg, "gamma_eg");
  detail::require_nonneg(omega_ge, "omega_ge");
  detail::require_nonneg(omega_er, "omega_er");
  double gsum = gamma_es + gamma_eg;
  double wsum = omega_ge * omega_ge + omega_er * omega_er;
  if (gsum <= 0.0) throw std::domain_error("gamma_es + gamma_eg must be > 0");
  if (wsum <= 0.0)
    throw std::domain_error("omega_ge^2 + omega_er^2 must be > 0");
  return gamma_es * omega_er * omega_er / (gsum * wsum);
}

// Relaxation rate of the |g>-|r> coherence induced by Rydberg decay and
// dephasing: gamma_rg = Gamma_re/2 + 2 gamma_r.
inline double coherence_relaxation_rate(double gamma_re, double gamma_r) {
  detail::require_nonneg(gamma_re, "gamma_re");
  detail::require_nonneg(gamma_r, "gamma_r");
  return 0.5 * gamma_re + 2.0 * gamma_r;
}

}  // namespace rfs
