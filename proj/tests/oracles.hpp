#pragma once

// Test-only reference computations. Nothing here calls into the library's
// quadrature or special-function code.

#include <cmath>
#include <cstddef>
#include <functional>

namespace brwlaw::oracle {

// Values pre-registered from a 40-digit mpmath run (tanh-sinh quadrature with
// the Taylor series of e^u - u - 1 below u = 1e-3).
inline constexpr double kRStar = 2.552694635841550243727532919786913356084;
inline constexpr double kLogRStar = 0.9371495211727038611217823434388461466068;
inline constexpr double kHOne = 1.103489604787619660528032607203385058258;
inline constexpr double kFTwo = 1.419079937362098658875616822149344728904;

// e^u - 1 - u in long double from its Taylor series (|u| small) or expm1l.
inline long double exp_minus_linear(long double u) {
  if (std::fabs(static_cast<double>(u)) < 1.0) {
    long double term = u * u / 2.0L;
    long double sum = term;
    for (int n = 3; n < 60; ++n) {
      term *= u / n;
      sum += term;
    }
    return sum;
  }
  return std::expm1l(u) - u;
}

// Composite Simpson with `panels` panels on [a, b].
inline long double simpson(const std::function<long double(long double)>& f, long double a,
                           long double b, std::size_t panels) {
  const long double h = (b - a) / static_cast<long double>(panels);
  long double sum = f(a) + f(b);
  for (std::size_t i = 1; i < panels; ++i) {
    sum += f(a + h * static_cast<long double>(i)) * ((i % 2 == 1) ? 4.0L : 2.0L);
  }
  return sum * h / 3.0L;
}

// H(y) for y >= 1 on 1e5 Simpson panels over [y, y + 80], plus the
// remainder bound sqrt(2) e^{-(y+80)/2}.
inline double h_reference(double y) {
  auto f = [](long double u) { return 1.0L / std::sqrt(2.0L * exp_minus_linear(u)); };
  const long double head = simpson(f, y, y + 80.0L, 100000);
  return static_cast<double>(head + std::sqrt(2.0L) * std::exp(-(y + 80.0L) / 2.0L));
}

// log r* = int_0^1 (g(u) - 1/u) du + H(1). The first integrand is smooth
// (limit -1/6 at 0) and is evaluated in long double.
inline double log_r_star_reference() {
  auto f = [](long double u) -> long double {
    if (u == 0.0L) return -1.0L / 6.0L;
    const long double g = 1.0L / std::sqrt(2.0L * exp_minus_linear(u));
    return g - 1.0L / u;
  };
  const long double head = simpson(f, 0.0L, 1.0L, 100000);
  return static_cast<double>(head) + h_reference(1.0);
}

}  // namespace brwlaw::oracle
