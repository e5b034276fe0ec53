#pragma once

// Moments and cumulants of W^(alpha) from the smoothing-transform fixed point.
//
// Writing log E e^{rW} = sum_k c_k r^k, the fixed point gives
//   c_k = mu_k / (k! k^{1+alpha}),
// i.e. the k-th (standard) cumulant is kappa_k = k! c_k = mu_k / k^{1+alpha}.
// Feeding that into the moment-cumulant identity
//   mu_k = sum_{m=1}^{k-1} C(k-1, m-1) kappa_m mu_{k-m} + kappa_k
// and solving for mu_k yields the recursion used below:
//   mu_k = (1 - k^{-(1+alpha)})^{-1}
//          sum_{m=1}^{k-1} C(k-1, m-1) mu_m mu_{k-m} / m^{1+alpha},   mu_1 = 1.
// For alpha = 1 this gives mu_2 = 4/3, mu_3 = 9/4.

#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "brwlaw/errors.hpp"

namespace brwlaw {

struct MomentTable {
  double alpha = 1.0;
  std::size_t K = 0;
  /// log mu_k for k = 1..K (index k - 1).
  std::vector<double> log_mu;
  /// mu_k for k = 1..K (index k - 1).
  std::vector<double> mu;
  /// c_k = mu_k / (k! k^{1+alpha}), the coefficients of the cumulant series.
  std::vector<double> c;

  double moment(std::size_t k) const { return mu.at(k - 1); }
  double coefficient(std::size_t k) const { return c.at(k - 1); }
  /// The k-th standard cumulant k! c_k.
  double cumulant(std::size_t k) const {
    return std::exp(log_mu.at(k - 1) - (1.0 + alpha) * std::log(static_cast<double>(k)));
  }
};

namespace detail {

inline double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// log mu_k from log mu_1..log mu_{k-1}, via log-sum-exp.
inline double next_log_moment(const std::vector<double>& log_mu, double alpha, std::size_t k) {
  const double exponent = 1.0 + alpha;
  std::vector<double> terms;
  terms.reserve(k - 1);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m < k; ++m) {
    const double t = log_binomial(static_cast<double>(k - 1), static_cast<double>(m - 1)) +
                     log_mu[m - 1] + log_mu[k - m - 1] -
                     exponent * std::log(static_cast<double>(m));
    terms.push_back(t);
    if (t > peak) peak = t;
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  const double self = std::exp(-exponent * std::log(static_cast<double>(k)));
  return peak + std::log(sum) - std::log1p(-self);
}

}  // namespace detail

/// Builds mu_1..mu_K and c_1..c_K for W^(alpha). Works in the log domain;
/// throws OrderTooLargeError once mu_k no longer fits in a double.
inline MomentTable build_moment_table(double alpha, std::size_t K) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("build_moment_table: alpha must be positive and finite");
  }
  if (K < 1) throw DomainError("build_moment_table: K must be at least 1");
  MomentTable table;
  table.alpha = alpha;
  table.K = K;
  table.log_mu.reserve(K);
  table.log_mu.push_back(0.0);
  for (std::size_t k = 2; k <= K; ++k) {
    table.log_mu.push_back(detail::next_log_moment(table.log_mu, alpha, k));
  }
  const double max_log = std::log(std::numeric_limits<double>::max());
  table.mu.reserve(K);
  table.c.reserve(K);
  for (std::size_t k = 1; k <= K; ++k) {
    const double lm = table.log_mu[k - 1];
    if (!(lm < max_log)) {
      std::ostringstream msg;
      msg << "build_moment_table: mu_" << k << " overflows double (log mu = " << lm << ")";
      throw OrderTooLargeError(msg.str());
    }
    const double kk = static_cast<double>(k);
    table.mu.push_back(std::exp(lm));
    table.c.push_back(std::exp(lm - std::lgamma(kk + 1.0) - (1.0 + alpha) * std::log(kk)));
  }
  return table;
}

/// A truncated power series together with its first omitted term.
struct SeriesValue {
  double value = 0.0;
  double first_omitted = 0.0;
  std::size_t terms = 0;
};

namespace detail {

// sum_{k=1}^{K} exp(log_coef_k) r^k, where log_coef_k = log_mu_k - extra_k,
// plus the K+1 term from one more recursion step.
template <typename LogCoefficient>
SeriesValue sum_moment_series(double r, const MomentTable& table, double constant,
                              LogCoefficient&& log_coefficient, const char* name) {
  SeriesValue out;
  out.value = constant;
  out.terms = table.K;
  if (r == 0.0) return out;
  const double log_abs_r = std::log(std::abs(r));
  const bool negative = r < 0.0;
  double previous = 0.0;
  double last = 0.0;
  for (std::size_t k = 1; k <= table.K; ++k) {
    const double magnitude =
        std::exp(log_coefficient(k, table.log_mu[k - 1]) + static_cast<double>(k) * log_abs_r);
    const double term = (negative && (k % 2 == 1)) ? -magnitude : magnitude;
    out.value += term;
    previous = last;
    last = magnitude;
  }
  const std::size_t next = table.K + 1;
  const double log_mu_next = next_log_moment(table.log_mu, table.alpha, next);
  out.first_omitted =
      std::exp(log_coefficient(next, log_mu_next) + static_cast<double>(next) * log_abs_r);
  if (table.K >= 2 && out.first_omitted > last && last > previous) {
    std::ostringstream msg;
    msg << name << ": terms grow at K = " << table.K << " for r = " << r
        << " (outside the radius of convergence)";
    throw RadiusExceededError(msg.str());
  }
  return out;
}

}  // namespace detail

/// 1 + sum_{k<=K} mu_k r^k / k!.
inline SeriesValue mgf_series(double r, const MomentTable& table) {
  return detail::sum_moment_series(
      r, table, 1.0,
      [](std::size_t k, double log_mu) {
        return log_mu - std::lgamma(static_cast<double>(k) + 1.0);
      },
      "mgf_series");
}

/// sum_{k<=K} c_k r^k, the truncated cumulant generating function.
inline SeriesValue cgf_series(double r, const MomentTable& table) {
  const double exponent = 1.0 + table.alpha;
  return detail::sum_moment_series(
      r, table, 0.0,
      [exponent](std::size_t k, double log_mu) {
        const double kk = static_cast<double>(k);
        return log_mu - std::lgamma(kk + 1.0) - exponent * std::log(kk);
      },
      "cgf_series");
}

/// log E e^{r W_1} = sum_{k<=K} r^k / (k! k^{1+alpha}) for the first-generation
/// value. first_omitted holds the bound |r|^{K+1} / (K+1)! on the remainder's
/// leading term.
inline SeriesValue w1_log_mgf(double alpha, double r, std::size_t K) {
  if (!(alpha > 0.0)) throw DomainError("w1_log_mgf: alpha must be positive");
  SeriesValue out;
  out.terms = K;
  double power_over_factorial = 1.0;
  for (std::size_t k = 1; k <= K; ++k) {
    const double kk = static_cast<double>(k);
    power_over_factorial *= r / kk;
    out.value += power_over_factorial * std::pow(kk, -(1.0 + alpha));
  }
  out.first_omitted = std::abs(power_over_factorial * r / static_cast<double>(K + 1));
  return out;
}

/// CSV with columns k, mu_k, c_k.
inline void write_moment_csv(std::ostream& out, const MomentTable& table) {
  const auto old_precision = out.precision(17);
  out << "k,mu_k,c_k\n";
  for (std::size_t k = 1; k <= table.K; ++k) {
    out << k << ',' << table.mu[k - 1] << ',' << table.c[k - 1] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace brwlaw
