#pragma once

// Adaptive quadrature and bracketed root finding.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <queue>
#include <sstream>
#include <utility>
#include <vector>

#include "brwlaw/errors.hpp"

namespace brwlaw {

template <typename F>
concept RealFunction = std::regular_invocable<F, double> &&
                       std::convertible_to<std::invoke_result_t<F, double>, double>;

struct QuadratureSpec {
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  std::size_t max_subdivisions = 4000;
  // Finite stand-in for +inf in the special-function integrals. The analytic
  // remainder sqrt(2) * exp(-tail_cutoff / 2) is added back explicitly.
  double tail_cutoff = 64.0;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
      throw DomainError("QuadratureSpec: tolerances must be positive");
    }
    if (max_subdivisions == 0) {
      throw DomainError("QuadratureSpec: max_subdivisions must be positive");
    }
    if (!(tail_cutoff > 0.0) || !std::isfinite(tail_cutoff)) {
      throw DomainError("QuadratureSpec: tail_cutoff must be finite and positive");
    }
  }
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t subdivisions = 0;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525992740, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Weights of the embedded Gauss rule at the odd Kronrod nodes.
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <RealFunction F>
Panel gauss_kronrod_21(const F& f, double lo, double hi) {
  const double centre = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double f_centre = f(centre);
  double kronrod = f_centre * kKronrodWeights[10];
  double gauss = 0.0;
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double pair = f(centre - dx) + f(centre + dx);
    kronrod += kKronrodWeights[j] * pair;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  return Panel{lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

template <RealFunction F>
QuadratureResult integrate_finite(const F& f, double lo, double hi, double abs_tol,
                                  double rel_tol, std::size_t max_subdivisions) {
  if (lo == hi) return {};
  std::priority_queue<Panel> panels;
  Panel first = gauss_kronrod_21(f, lo, hi);
  double total = first.value;
  double total_error = first.error;
  panels.push(first);
  std::size_t subdivisions = 1;
  while (total_error > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (subdivisions >= max_subdivisions) {
      std::ostringstream msg;
      msg << "integrate_adaptive: tolerance not reached after " << subdivisions
          << " subdivisions on [" << lo << ", " << hi << "]";
      throw ToleranceError(msg.str(), total, total_error);
    }
    Panel worst = panels.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      // Panel at floating-point resolution; nothing more to gain.
      std::ostringstream msg;
      msg << "integrate_adaptive: panel width underflow near " << worst.lo;
      throw ToleranceError(msg.str(), total, total_error);
    }
    panels.pop();
    Panel left = gauss_kronrod_21(f, worst.lo, mid);
    Panel right = gauss_kronrod_21(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++subdivisions;
  }
  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  total_error = 0.0;
  std::vector<Panel> all;
  all.reserve(panels.size());
  while (!panels.empty()) {
    all.push_back(panels.top());
    panels.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& a, const Panel& b) { return a.lo < b.lo; });
  for (const Panel& p : all) {
    total += p.value;
    total_error += p.error;
  }
  return {total, total_error, subdivisions};
}

}  // namespace detail

/// Globally adaptive 21-point Gauss-Kronrod quadrature of f over (lo, hi).
///
/// Endpoints are never evaluated, so integrable endpoint singularities are
/// fine. An infinite upper limit is split at spec.tail_cutoff; the piece
/// beyond it is mapped onto [0, 1) with x = c + t / (1 - t).
///
/// Throws ToleranceError (carrying the best estimate) when the budget of
/// spec.max_subdivisions is exhausted.
template <RealFunction F>
QuadratureResult integrate_adaptive_detailed(const F& f, double lo, double hi,
                                             const QuadratureSpec& spec = {}) {
  spec.validate();
  if (std::isnan(lo) || std::isnan(hi) || std::isinf(lo)) {
    throw DomainError("integrate_adaptive: lower limit must be finite");
  }
  if (hi < lo) {
    QuadratureResult r = integrate_adaptive_detailed(f, hi, lo, spec);
    r.value = -r.value;
    return r;
  }
  if (std::isfinite(hi)) {
    return detail::integrate_finite(f, lo, hi, spec.abs_tol, spec.rel_tol,
                                    spec.max_subdivisions);
  }
  const double cut = std::max(lo, spec.tail_cutoff);
  QuadratureResult head = detail::integrate_finite(f, lo, cut, 0.5 * spec.abs_tol,
                                                   spec.rel_tol, spec.max_subdivisions);
  auto mapped = [&f, cut](double t) {
    const double one_minus = 1.0 - t;
    return f(cut + t / one_minus) / (one_minus * one_minus);
  };
  QuadratureResult tail = detail::integrate_finite(mapped, 0.0, 1.0, 0.5 * spec.abs_tol,
                                                   spec.rel_tol, spec.max_subdivisions);
  return {head.value + tail.value, head.error + tail.error,
          head.subdivisions + tail.subdivisions};
}

template <RealFunction F>
double integrate_adaptive(const F& f, double lo, double hi, const QuadratureSpec& spec = {}) {
  return integrate_adaptive_detailed(f, lo, hi, spec).value;
}

struct RootSpec {
  double abs_tol = 0.0;
  double rel_tol = 4.0 * std::numeric_limits<double>::epsilon();
  int max_iterations = 200;
};

/// Brent's method on a sign-changing bracket [lo, hi].
template <RealFunction F>
double find_root(const F& f, double lo, double hi, const RootSpec& spec = {}) {
  double a = lo;
  double b = hi;
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) {
    std::ostringstream msg;
    msg << "find_root: no sign change on [" << lo << ", " << hi << "] (f = " << fa << ", "
        << fb << ")";
    throw BracketError(msg.str());
  }
  double c = a;
  double fc = fa;
  double d = b - a;
  double e = d;
  for (int iter = 0; iter < spec.max_iterations; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) +
                       0.5 * std::max(spec.abs_tol, spec.rel_tol * std::abs(b));
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0) return b;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p;
      double q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) {
        q = -q;
      } else {
        p = -p;
      }
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
    fb = f(b);
  }
  return b;
}

}  // namespace brwlaw
