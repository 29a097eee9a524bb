#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "rfs/errors.hpp"

namespace rfs {

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_max = 1e-2;    // us
  double h_init = 0.0;    // 0 -> h_max / 100
  double safety = 0.9;
  double min_factor = 0.2;
  double max_factor = 5.0;
};

// Adaptive embedded Dormand-Prince 5(4) pair on complex state vectors, with
// the standard 4th-order continuous extension for dense output. Coefficients
// from Hairer, Norsett & Wanner, "Solving ODEs I".
//
// The right-hand side is any callable rhs(t, y, dydt). step_to() advances by
// one accepted step without overshooting a target time, after which the
// solution anywhere inside the step is available through dense_eval().
class Dopri5 {
 public:
  using Complex = std::complex<double>;
  using Rhs =
      std::function<void(double, std::span<const Complex>, std::span<Complex>)>;

  Dopri5(Rhs rhs, IntegratorOptions opts) : rhs_(std::move(rhs)), opts_(opts) {}

  void start(double t0, std::vector<Complex> y0) {
    t_ = t0;
    y_ = std::move(y0);
    std::size_t n = y_.size();
    for (auto& k : k_) k.assign(n, Complex{});
    y_new_.assign(n, Complex{});
    y_stage_.assign(n, Complex{});
    for (auto& c : cont_) c.assign(n, Complex{});
    h_ = opts_.h_init > 0.0 ? opts_.h_init : opts_.h_max / 100.0;
    h_ = std::min(h_, opts_.h_max);
    rhs_(t_, y_, k_[0]);
    have_dense_ = false;
  }

  double t() const { return t_; }
  const std::vector<Complex>& y() const { return y_; }
  double last_step() const { return h_last_; }

  // Advances by one accepted step, clipped so that t never exceeds t_target.
  // Returns the new time.
  double step_to(double t_target) {
    const std::size_t n = y_.size();
    for (;;) {
      double h = std::min({h_, opts_.h_max, t_target - t_});
      if (h <= 0.0) return t_;  // already at the target
      bool clipped = h < h_;
      if (t_ + h >= t_target) h = t_target - t_;

      // Stages. k1 is fresh from FSAL or start().
      stage(h, 1, {kA21});
      stage(h, 2, {kA31, kA32});
      stage(h, 3, {kA41, kA42, kA43});
      stage(h, 4, {kA51, kA52, kA53, kA54});
      stage(h, 5, {kA61, kA62, kA63, kA64, kA65});
      // 5th-order solution (b row equals the a7 row)
      for (std::size_t i = 0; i < n; ++i)
        y_new_[i] = y_[i] + h * (kA71 * k_[0][i] + kA73 * k_[2][i] +
                                 kA74 * k_[3][i] + kA75 * k_[4][i] +
                                 kA76 * k_[5][i]);
      rhs_(t_ + h, y_new_, k_[6]);

      // Embedded error estimate
      double err_sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        Complex e = h * (kE1 * k_[0][i] + kE3 * k_[2][i] + kE4 * k_[3][i] +
                         kE5 * k_[4][i] + kE6 * k_[5][i] + kE7 * k_[6][i]);
        double sc = opts_.atol +
                    opts_.rtol * std::max(std::abs(y_[i]), std::abs(y_new_[i]));
        double q = std::abs(e) / sc;
        err_sq += q * q;
      }
      double err = std::sqrt(err_sq / static_cast<double>(n));
      if (!std::isfinite(err)) err = 1e10;  // NaN/Inf from the RHS: reject

      if (err <= 1.0) {
        build_dense(h);
        t_new_ = t_ + h;
        h_last_ = h;
        double fac = err > 0.0
                         ? opts_.safety * std::pow(err, -0.2)
                         : opts_.max_factor;
        fac = std::clamp(fac, opts_.min_factor, opts_.max_factor);
        double h_next = std::min(h * fac, opts_.h_max);
        if (!clipped || h_next < h_) h_ = h_next;
        t_ = t_new_;
        std::swap(y_, y_new_);
        std::swap(k_[0], k_[6]);  // FSAL
        return t_;
      }

      double fac = std::clamp(opts_.safety * std::pow(err, -0.2),
                              opts_.min_factor, 1.0);
      h_ = h * fac;
      if (h_ < 1e-14 * std::max(1.0, std::abs(t_)))
        throw propagation_error(t_, "step size underflow (err = " +
                                        std::to_string(err) + ")");
    }
  }

  // Solution at t_prev + theta * h_last for theta in [0, 1], from the dense
  // output of the last accepted step.
  void dense_eval(double theta, std::vector<Complex>& out) const {
    const std::size_t n = cont_[0].size();
    out.resize(n);
    double th1 = 1.0 - theta;
    for (std::size_t i = 0; i < n; ++i)
      out[i] = cont_[0][i] +
               theta * (cont_[1][i] +
                        th1 * (cont_[2][i] +
                               theta * (cont_[3][i] + th1 * cont_[4][i])));
  }

  // Restart from an externally modified state (e.g. after a quantum jump),
  // keeping the last step size as the initial guess.
  void restart(double t0, std::vector<Complex> y0) {
    t_ = t0;
    y_ = std::move(y0);
    rhs_(t_, y_, k_[0]);
    have_dense_ = false;
  }

 private:
  void stage(double h, int s, std::initializer_list<double> a_row) {
    const std::size_t n = y_.size();
    for (std::size_t i = 0; i < n; ++i) {
      Complex acc = 0.0;
      int j = 0;
      for (double a : a_row) acc += a * k_[j++][i];
      y_stage_[i] = y_[i] + h * acc;
    }
    rhs_(t_ + kC[s] * h, y_stage_, k_[s]);
  }

  void build_dense(double h) {
    const std::size_t n = y_.size();
    for (std::size_t i = 0; i < n; ++i) {
      Complex ydiff = y_new_[i] - y_[i];
      Complex bspl = h * k_[0][i] - ydiff;
      cont_[0][i] = y_[i];
      cont_[1][i] = ydiff;
      cont_[2][i] = bspl;
      cont_[3][i] = ydiff - h * k_[6][i] - bspl;
      cont_[4][i] = h * (kD1 * k_[0][i] + kD3 * k_[2][i] + kD4 * k_[3][i] +
                         kD5 * k_[4][i] + kD6 * k_[5][i] + kD7 * k_[6][i]);
    }
    have_dense_ = true;
  }

  // Butcher tableau
  static constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5,
                                   8.0 / 9, 1.0, 1.0};
  static constexpr double kA21 = 1.0 / 5;
  static constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
  static constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15,
                          kA43 = 32.0 / 9;
  static constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                          kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
  static constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                          kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                          kA65 = -5103.0 / 18656;
  static constexpr double kA71 = 35.0 / 384, kA73 = 500.0 / 1113,
                          kA74 = 125.0 / 192, kA75 = -2187.0 / 6784,
                          kA76 = 11.0 / 84;
  // e = b5 - b4 (error weights)
  static constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695,
                          kE4 = 71.0 / 1920, kE5 = -17253.0 / 339200,
                          kE6 = 22.0 / 525, kE7 = -1.0 / 40;
  // dense-output weights
  static constexpr double kD1 = -12715105075.0 / 11282082432.0,
                          kD3 = 87487479700.0 / 32700410799.0,
                          kD4 = -10690763975.0 / 1880347072.0,
                          kD5 = 701980252875.0 / 199316789632.0,
                          kD6 = -1453857185.0 / 822651844.0,
                          kD7 = 69997945.0 / 29380423.0;

  Rhs rhs_;
  IntegratorOptions opts_;
  double t_ = 0.0, t_new_ = 0.0;
  double h_ = 0.0, h_last_ = 0.0;
  std::vector<Complex> y_, y_new_, y_stage_;
  std::vector<Complex> k_[7];
  std::vector<Complex> cont_[5];
  bool have_dense_ = false;
};

}  // namespace rfs
