#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "rfs/atom_model.hpp"

namespace rfs {

enum class RampKind { SineSquared, Tanh };

inline const char* ramp_kind_name(RampKind k) {
  return k == RampKind::SineSquared ? "sine_squared" : "tanh";
}

inline RampKind ramp_kind_from_name(const std::string& s) {
  if (s == "sine_squared") return RampKind::SineSquared;
  if (s == "tanh") return RampKind::Tanh;
  throw std::domain_error("unknown ramp kind '" + s + "'");
}

// Drive schedule for one filtering run. Omega_er is switched on first and held
// constant for the whole process; Omega_ge rises from zero to a peak well
// above Omega_er, holds, and falls back to zero (counterintuitive STIRAP
// ordering at both ends).
struct PulseSchedule {
  double omega_er_level = 5.0;   // 1/us, constant throughout
  double omega_ge_peak = 30.0;   // 1/us
  double t_start_ge = 0.0;       // us
  double t_rise = 1.0;           // us
  double t_hold = 1.0;           // us
  double t_fall = 1.0;           // us
  RampKind ramp_kind = RampKind::SineSquared;
  double delta_e_level = 0.0;    // rad/us, constant
  double total_duration = 4.0;   // us

  void validate() const {
    detail::require_nonneg(omega_er_level, "omega_er_level");
    detail::require_nonneg(omega_ge_peak, "omega_ge_peak");
    detail::require_nonneg(t_start_ge, "t_start_ge");
    detail::require_nonneg(t_rise, "t_rise");
    detail::require_nonneg(t_hold, "t_hold");
    detail::require_nonneg(t_fall, "t_fall");
    detail::require_finite(delta_e_level, "delta_e_level");
    if (!(total_duration > 0.0))
      throw std::domain_error("total_duration must be > 0");
    if (t_start_ge + t_rise + t_hold + t_fall > total_duration * (1 + 1e-12))
      throw std::domain_error("pulse segments exceed total_duration");
    if (omega_ge_peak < 5.0 * omega_er_level)
      throw std::domain_error(
          "omega_ge_peak must be at least 5x omega_er_level");
  }

  double omega_er(double t) const {
    check_time(t);
    return omega_er_level;
  }

  double delta_e(double t) const {
    check_time(t);
    return delta_e_level;
  }

  // Piecewise-smooth pump envelope: zero outside
  // [t_start_ge, t_start_ge + t_rise + t_hold + t_fall].
  double omega_ge(double t) const {
    check_time(t);
    double u = t - t_start_ge;
    if (u <= 0.0) return 0.0;
    if (u < t_rise) return omega_ge_peak * ramp(u / t_rise);
    u -= t_rise;
    if (u <= t_hold) return omega_ge_peak;
    u -= t_hold;
    if (u < t_fall) return omega_ge_peak * ramp(1.0 - u / t_fall);
    return 0.0;
  }

  double pulse_end() const { return t_start_ge + t_rise + t_hold + t_fall; }

 private:
  void check_time(double t) const {
    if (!(t >= 0.0) || t > total_duration * (1 + 1e-12))
      throw std::domain_error("schedule evaluated at t = " +
                              std::to_string(t) + " outside [0, " +
                              std::to_string(total_duration) + "]");
  }

  double ramp(double x) const {  // x in [0,1], 0 -> 0, 1 -> 1
    if (ramp_kind == RampKind::SineSquared) {
      double s = std::sin(0.5 * std::numbers::pi * x);
      return s * s;
    }
    // tanh ramp normalized to exact endpoints
    double lo = std::tanh(-4.0), hi = std::tanh(4.0);
    return (std::tanh(4.0 * (2.0 * x - 1.0)) - lo) / (hi - lo);
  }
};

// Local adiabaticity diagnostic (d/dt w0) / (w0 * min |lambda_pm|), with the
// derivative taken by central finite difference (step 1e-3 us, clamped to the
// schedule domain near the edges). Values well below 1 mean the dark state is
// followed adiabatically.
inline double adiabaticity_margin(double t, const PulseSchedule& schedule) {
  constexpr double kStep = 1e-3;
  auto w0 = [&](double tau) {
    double oge = schedule.omega_ge(tau);
    double oer = schedule.omega_er(tau);
    return std::sqrt(oge * oge + oer * oer);
  };
  double w0_t = w0(t);
  if (w0_t <= 0.0)
    throw std::domain_error("adiabaticity margin undefined: w0(t) = 0");
  double t0 = std::max(0.0, t - kStep);
  double t1 = std::min(schedule.total_duration, t + kStep);
  double dw0 = (w0(t1) - w0(t0)) / (t1 - t0);
  auto eig = lambda_eigensystem(schedule.omega_ge(t), schedule.omega_er(t),
                                schedule.delta_e(t));
  double gap = std::min(std::abs(eig.lambda_plus), std::abs(eig.lambda_minus));
  return std::abs(dw0) / (w0_t * gap);
}

}  // namespace rfs
