#pragma once

// The law of the terminal value W (alpha = 1): moment generating function on
// (0, r*), its logarithm, the Laplace transform on [0, inf), and the
// reference asymptotes for both tails.

#include <algorithm>
#include <cmath>
#include <sstream>

#include "brwlaw/errors.hpp"
#include "brwlaw/moments.hpp"
#include "brwlaw/ode.hpp"
#include "brwlaw/special_functions.hpp"

namespace brwlaw {

enum class MgfMethod { f_inversion, series, ode };

struct MgfValue {
  double r = 0.0;
  double value = 0.0;
  MgfMethod method = MgfMethod::f_inversion;
};

/// Relative distance to r* below which mgf refuses to evaluate.
inline constexpr double kExplosionGuard = 1e-12;

namespace detail {

inline void check_mgf_domain(double r, const LawTables& tables, const char* name) {
  if (!(r > 0.0) || !(r < tables.r_star() * (1.0 - kExplosionGuard))) {
    std::ostringstream msg;
    msg.precision(17);
    msg << name << ": r = " << r << " outside (0, r*) with explosion point r* = "
        << tables.r_star();
    throw DomainError(msg.str());
  }
}

// log r* - log r, computed so that neither end loses precision.
inline double log_ratio_to_r_star(double r, const LawTables& tables) {
  if (r < 0.5 * tables.r_star()) return tables.log_r_star() - std::log(r);
  return -std::log1p((r - tables.r_star()) / tables.r_star());
}

}  // namespace detail

/// psi(r) = log E e^{rW}, from H(psi(r)) = log r* - log r.
inline double cgf(double r, const LawTables& tables) {
  detail::check_mgf_domain(r, tables, "cgf");
  return invert_H(detail::log_ratio_to_r_star(r, tables), tables);
}

/// phi(r) = E e^{rW} = F^{-1}(log r* - log r) for 0 < r < r*.
inline double mgf(double r, const LawTables& tables) {
  detail::check_mgf_domain(r, tables, "mgf");
  return std::exp(cgf(r, tables));
}

inline MgfValue mgf_value(double r, const LawTables& tables) {
  return MgfValue{r, mgf(r, tables), MgfMethod::f_inversion};
}

struct OdeResidual {
  double residual = 0.0;  ///< |r^2 psi'(r)^2 - 2 (e^psi - psi - 1)|
  double rhs = 0.0;       ///< 2 (e^psi - psi - 1)
  double relative() const { return residual / (1.0 + std::abs(rhs)); }
};

/// Checks r^2 psi'^2 = 2 (e^psi - psi - 1) with a central difference of step h.
inline OdeResidual ode_residual(double r, double h, const LawTables& tables) {
  if (!(h > 0.0) || !(r - h > 0.0) ||
      !(r + h < tables.r_star() * (1.0 - kExplosionGuard))) {
    std::ostringstream msg;
    msg << "ode_residual: stencil [" << r - h << ", " << r + h << "] leaves (0, r*)";
    throw DomainError(msg.str());
  }
  const double psi = cgf(r, tables);
  const double slope = (cgf(r + h, tables) - cgf(r - h, tables)) / (2.0 * h);
  OdeResidual out;
  out.rhs = 2.0 * detail::exp_minus_linear(psi);
  out.residual = std::abs(r * r * slope * slope - out.rhs);
  return out;
}

/// State of the negative-axis integration, reported in diagnostics.
struct OdeState {
  double s = 0.0;
  double psi = 0.0;
  double step = 0.0;
};

struct LaplaceOptions {
  /// |s| at which the cumulant series hands over to the ODE.
  double series_start = 1e-3;
  /// Number of cumulant terms used for the starting value.
  std::size_t series_terms = 10;
  OdeOptions ode{};
};

/// log E e^{-rW} for r >= 0.
///
/// On s < 0 the cumulant generating function solves
///   psi'(s) = sqrt(2 (e^psi - psi - 1)) / (-s),   psi increasing, psi < 0,
/// which is singular at s = 0. The value at s0 = -series_start comes from the
/// cumulant series; beyond that the equation is integrated in tau = log(-s),
/// where it becomes autonomous: dpsi/dtau = -sqrt(2 (e^psi - psi - 1)).
inline double laplace_log(double r, const MomentTable& moments, const LawTables& tables,
                          const LaplaceOptions& options = {}) {
  (void)tables;
  if (!(r >= 0.0) || std::isinf(r)) {
    std::ostringstream msg;
    msg << "laplace: r must be finite and nonnegative, got " << r;
    throw DomainError(msg.str());
  }
  if (moments.alpha != 1.0) {
    throw DomainError("laplace: the closed-form law needs a moment table with alpha = 1");
  }
  if (r == 0.0) return 0.0;
  const std::size_t terms = std::min(options.series_terms, moments.K);
  auto series = [&](double s) {
    double sum = 0.0;
    double power = 1.0;
    for (std::size_t k = 1; k <= terms; ++k) {
      power *= s;
      sum += moments.c[k - 1] * power;
    }
    return sum;
  };
  if (r <= options.series_start) return series(-r);

  const double tau0 = std::log(options.series_start);
  const double psi0 = series(-options.series_start);
  auto rhs = [](double, double psi) { return -std::sqrt(2.0 * detail::exp_minus_linear(psi)); };
  double previous = psi0;
  auto on_branch = [&previous](double, double psi) {
    const bool ok = psi < 0.0 && psi <= previous;
    if (ok) previous = psi;
    return ok;
  };
  try {
    return integrate_ode(rhs, on_branch, tau0, psi0, std::log(r), options.ode);
  } catch (const OdeError& e) {
    // Report in the original coordinate s = -e^tau.
    std::ostringstream msg;
    msg << "laplace: " << e.what() << " (s = " << -std::exp(e.s()) << ")";
    throw OdeError(msg.str(), -std::exp(e.s()), e.psi(), e.step());
  }
}

/// phi_L(r) = E e^{-rW}.
inline double laplace(double r, const MomentTable& moments, const LawTables& tables,
                      const LaplaceOptions& options = {}) {
  return std::exp(laplace_log(r, moments, tables, options));
}

/// phi(r* - eps) eps^2 / (2 r*^2), which tends to 1 as eps -> 0.
inline double explosion_asymptote_check(double eps, const LawTables& tables) {
  const double r_star = tables.r_star();
  if (!(eps > 0.0) || !(eps < 0.5 * r_star)) {
    std::ostringstream msg;
    msg << "explosion_asymptote_check: eps must lie in (0, r*/2), got " << eps;
    throw DomainError(msg.str());
  }
  const double v = -std::log1p(-eps / r_star);
  const double log_phi = invert_H(v, tables);
  return std::exp(log_phi + 2.0 * std::log(eps) - std::log(2.0) - 2.0 * std::log(r_star));
}

/// Exponential rate of the right tail, -log P(W > x) ~ r* x.
inline double right_tail_rate(const LawTables& tables) { return tables.r_star(); }

/// (log x)^2 / 2, the left-tail reference -log P(W < x) ~ (log x)^2 / 2.
inline double left_tail_asymptote(double x) {
  if (!(x > 0.0 && x < 1.0)) {
    std::ostringstream msg;
    msg << "left_tail_asymptote: x must lie in (0, 1), got " << x;
    throw DomainError(msg.str());
  }
  const double l = std::log(x);
  return 0.5 * l * l;
}

}  // namespace brwlaw
