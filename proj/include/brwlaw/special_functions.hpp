#pragma once

// The integral functions behind the law of the terminal value:
//
//   H(y)  = int_y^inf du / sqrt(2 (e^u - u - 1)),          y > 0
//   F(y)  = H(log y),                                         y > 1
//   r*    = exp( int_0^inf [ (2 (e^u - u - 1))^{-1/2} - 1{u<1}/u ] du )
//   G(y)  = int_y^{phi1} du / (u sqrt(u - log u - 1)),       0 < y <= phi1 < 1
//
// Near zero H(y) = -log y + log r* + O(y), which is how r* is assembled.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "brwlaw/errors.hpp"
#include "brwlaw/numerics.hpp"

namespace brwlaw {

namespace detail {

// e^u - 1 - u without cancellation for small |u|.
inline double exp_minus_linear(double u) {
  if (std::abs(u) < 0.5) {
    // sum_{n>=2} u^n / n!
    double term = 0.5 * u * u;
    double sum = term;
    for (int n = 3; n < 40; ++n) {
      term *= u / n;
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return std::expm1(u) - u;
}

// s(u) - 1 where e^u - 1 - u = (u^2 / 2) s(u); s(u) - 1 = u/3 + u^2/12 + ...
inline double quadratic_excess(double u) {
  if (std::abs(u) < 0.5) {
    // 2 sum_{n>=3} u^{n-2} / n!
    double term = u / 3.0;
    double sum = term;
    for (int n = 4; n < 40; ++n) {
      term *= u / n;
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return 2.0 * exp_minus_linear(u) / (u * u) - 1.0;
}

// The integrand of H.
inline double h_integrand(double u) { return 1.0 / std::sqrt(2.0 * exp_minus_linear(u)); }

// h_integrand(u) - 1/u, evaluated as -(s-1) / (u sqrt(s) (1 + sqrt(s))).
inline double h_integrand_regular(double u) {
  const double excess = quadratic_excess(u);
  const double root = std::sqrt(1.0 + excess);
  return -excess / (u * root * (1.0 + root));
}

inline double integrate_h_regular(double a, double b, const QuadratureSpec& quad) {
  return integrate_adaptive([](double u) { return h_integrand_regular(u); }, a, b, quad);
}

// H(y) for y >= 1 written as e^{-y/2} * J(y) with
//   J(y) = int_0^inf dv / sqrt(2 (e^v - (1 + y + v) e^{-y}))
// so the relative accuracy does not degrade as H(y) -> 0.
inline double h_upper(double y, const QuadratureSpec& quad) {
  const double decay = std::exp(-y);
  auto integrand = [y, decay](double v) {
    return 1.0 / std::sqrt(2.0 * (std::exp(v) - (1.0 + y + v) * decay));
  };
  const double cut = quad.tail_cutoff;
  const double head = integrate_adaptive(integrand, 0.0, cut, quad);
  // int_cut^inf (2 e^v)^{-1/2} dv; the neglected factor is 1 + O(cut e^{-cut}).
  const double tail = std::sqrt(2.0) * std::exp(-0.5 * cut);
  return std::exp(-0.5 * y) * (head + tail);
}

class HMemo {
 public:
  static constexpr std::size_t kMaxEntries = 1u << 16;

  bool find(double y, double& out) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(bits(y));
    if (it == cache_.end()) return false;
    out = it->second;
    return true;
  }

  void store(double y, double value) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (cache_.size() >= kMaxEntries) cache_.clear();
    cache_.emplace(bits(y), value);
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.size();
  }

 private:
  static std::uint64_t bits(double y) {
    std::uint64_t b;
    std::memcpy(&b, &y, sizeof b);
    return b;
  }

  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, double> cache_;
};

}  // namespace detail

/// Computes r* from its defining integral. The 1/u subtraction on (0, 1) is
/// done analytically so the integrand stays bounded near zero.
inline double compute_r_star(const QuadratureSpec& quad = {}) {
  quad.validate();
  const double log_r_star = detail::integrate_h_regular(0.0, 1.0, quad) + detail::h_upper(1.0, quad);
  return std::exp(log_r_star);
}

/// r*, the quadrature settings, and a memo of H evaluations. Copies share
/// the memo, which is internally synchronised.
class LawTables {
 public:
  explicit LawTables(const QuadratureSpec& quad = {})
      : quad_(quad), memo_(std::make_shared<detail::HMemo>()) {
    quad_.validate();
    h_one_ = detail::h_upper(1.0, quad_);
    log_r_star_ = detail::integrate_h_regular(0.0, 1.0, quad_) + h_one_;
    r_star_ = std::exp(log_r_star_);
  }

  double r_star() const noexcept { return r_star_; }
  double log_r_star() const noexcept { return log_r_star_; }
  /// H(1), the split point between the two evaluation routes for H.
  double h_one() const noexcept { return h_one_; }
  const QuadratureSpec& quad() const noexcept { return quad_; }
  std::size_t memo_size() const { return memo_->size(); }

  bool memo_find(double y, double& out) const { return memo_->find(y, out); }
  void memo_store(double y, double value) const { memo_->store(y, value); }

 private:
  QuadratureSpec quad_;
  std::shared_ptr<detail::HMemo> memo_;
  double h_one_ = 0.0;
  double log_r_star_ = 0.0;
  double r_star_ = 0.0;
};

/// Process-wide tables at the default tolerances, built on first use.
inline const LawTables& default_law_tables() {
  static const LawTables tables{};
  return tables;
}

inline double eval_H(double y, const LawTables& tables) {
  if (!(y > 0.0)) {
    std::ostringstream msg;
    msg << "eval_H: argument must be positive, got " << y;
    throw DomainError(msg.str());
  }
  if (std::isinf(y)) return 0.0;
  double cached;
  if (tables.memo_find(y, cached)) return cached;
  double value;
  if (y >= 1.0) {
    value = y == 1.0 ? tables.h_one() : detail::h_upper(y, tables.quad());
  } else {
    value = -std::log(y) + detail::integrate_h_regular(y, 1.0, tables.quad()) + tables.h_one();
  }
  tables.memo_store(y, value);
  return value;
}

inline double eval_F(double y, const LawTables& tables) {
  if (!(y > 1.0)) {
    std::ostringstream msg;
    msg << "eval_F: argument must exceed 1, got " << y;
    throw DomainError(msg.str());
  }
  return eval_H(std::log(y), tables);
}

/// Solves H(z) = v for z > 0.
inline double invert_H(double v, const LawTables& tables) {
  if (!(v > 0.0) || std::isinf(v)) {
    std::ostringstream msg;
    msg << "invert_H: argument must be positive and finite, got " << v;
    throw DomainError(msg.str());
  }
  auto residual = [&tables, v](double z) { return eval_H(z, tables) - v; };
  // Bracket in y = e^z: y_lo = 1 + 1e-12, y_hi doubled until F(y_hi) < v.
  double z_lo = std::log1p(1e-12);
  while (residual(z_lo) < 0.0) {
    z_lo *= 1.0 / 1024.0;
    if (z_lo < std::numeric_limits<double>::min()) {
      throw BracketError("invert_H: lower bracket underflow");
    }
  }
  double z_hi = std::log(2.0);
  while (residual(z_hi) > 0.0) {
    z_hi += std::log(2.0);
    if (z_hi > 1400.0) throw BracketError("invert_H: upper bracket overflow");
  }
  RootSpec spec;
  spec.rel_tol = 2.0 * std::numeric_limits<double>::epsilon();
  return find_root(residual, z_lo, z_hi, spec);
}

/// F^{-1}(v) = exp(H^{-1}(v)), a bijection (0, inf) -> (1, inf).
inline double invert_F(double v, const LawTables& tables) {
  if (!(v > 0.0)) {
    std::ostringstream msg;
    msg << "invert_F: argument must be positive, got " << v;
    throw DomainError(msg.str());
  }
  if (std::isinf(v)) return 1.0;
  return std::exp(invert_H(v, tables));
}

/// G(y) for 0 < y <= varphi1 < 1. Integrated in p = log u, where the
/// integrand becomes 1 / sqrt(e^p - p - 1).
inline double eval_G(double y, double varphi1, const LawTables& tables) {
  if (!(varphi1 > 0.0 && varphi1 < 1.0)) {
    std::ostringstream msg;
    msg << "eval_G: varphi1 must lie in (0, 1), got " << varphi1;
    throw DomainError(msg.str());
  }
  if (!(y > 0.0 && y <= varphi1)) {
    std::ostringstream msg;
    msg << "eval_G: argument must lie in (0, " << varphi1 << "], got " << y;
    throw DomainError(msg.str());
  }
  if (y == varphi1) return 0.0;
  auto integrand = [](double p) { return 1.0 / std::sqrt(detail::exp_minus_linear(p)); };
  return integrate_adaptive(integrand, std::log(y), std::log(varphi1), tables.quad());
}

/// Same as eval_G but taking log y directly, for arguments below the
/// smallest positive double.
inline double eval_G_log(double log_y, double log_varphi1, const LawTables& tables) {
  if (!(log_varphi1 < 0.0) || !(log_y <= log_varphi1)) {
    throw DomainError("eval_G_log: need log_y <= log_varphi1 < 0");
  }
  if (log_y == log_varphi1) return 0.0;
  auto integrand = [](double p) { return 1.0 / std::sqrt(detail::exp_minus_linear(p)); };
  return integrate_adaptive(integrand, log_y, log_varphi1, tables.quad());
}

}  // namespace brwlaw
