#pragma once

// Adaptive Dormand-Prince 5(4) integrator for scalar initial value problems.

#include <algorithm>
#include <cmath>
#include <sstream>

#include "brwlaw/errors.hpp"

namespace brwlaw {

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double initial_step = 1e-3;
  long max_steps = 1'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
};

/// Integrates y' = f(x, y) from (x0, y0) to x1 (x1 > x0). A step is also
/// rejected when `admissible(x, y)` is false for the proposed state, which is
/// how callers pin the solution to a branch.
template <typename Rhs, typename Admissible>
double integrate_ode(Rhs&& f, Admissible&& admissible, double x0, double y0, double x1,
                     const OdeOptions& options = {}, OdeStats* stats = nullptr) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  if (!(x1 >= x0)) throw DomainError("integrate_ode: x1 must not precede x0");
  double x = x0;
  double y = y0;
  double h = std::min(options.initial_step, x1 - x0);
  double k1 = f(x, y);
  OdeStats local;
  while (x < x1) {
    if (local.accepted + local.rejected > options.max_steps) {
      throw OdeError("integrate_ode: step budget exhausted", x, y, h);
    }
    if (h < 1e-14 * std::max(1.0, std::abs(x))) {
      std::ostringstream msg;
      msg << "integrate_ode: step size underflow at x = " << x << ", y = " << y;
      throw OdeError(msg.str(), x, y, h);
    }
    const bool last = x + h >= x1;
    if (last) h = x1 - x;
    const double k2 = f(x + c2 * h, y + h * a21 * k1);
    const double k3 = f(x + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const double k4 = f(x + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 = f(x + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double k6 =
        f(x + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double k7 = f(x + h, y_new);
    const double err_abs =
        std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
    const double scale =
        options.abs_tol + options.rel_tol * std::max(std::abs(y), std::abs(y_new));
    const double err = err_abs / scale;
    const double x_new = last ? x1 : x + h;
    if (err <= 1.0 && std::isfinite(y_new) && admissible(x_new, y_new)) {
      x = x_new;
      y = y_new;
      k1 = k7;
      ++local.accepted;
      const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= grow;
    } else {
      ++local.rejected;
      const double shrink =
          (std::isfinite(err) && err > 1.0) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5) : 0.5;
      h *= shrink;
    }
  }
  if (stats) *stats = local;
  return y;
}

}  // namespace brwlaw
