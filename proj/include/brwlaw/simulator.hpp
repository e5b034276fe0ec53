#pragma once

// Monte Carlo engine for the Poisson-offspring branching random walk.
//
// Offspring of an atom form a Poisson process on {t' > 0, x' > 0} with
// intensity x'^{alpha-1} / Gamma(alpha) dx' dt'. The process is generated
// lazily in unit shells j <= t' + x' < j + 1, each shell from its own keyed
// stream, so any region of the tree can be revealed without disturbing the
// rest. This is what couples W with V_t on the same tree.
//
// A sample is a depth-first exploration. Writing l for the normalized log
// weight of an atom, the children inside {t' + x' <= L} with
// L = min(T, l - log eps) are revealed; the expected contribution of the
// others, e^l Q(alpha + 1, L), is either added back (conditional-mean mode,
// the default: the sample is E[W | revealed atoms], unbiased) or dropped and
// booked in pruned_mass (drop mode). Atoms at depth n_generations contribute
// their weight.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "brwlaw/errors.hpp"
#include "brwlaw/numerics.hpp"
#include "brwlaw/random.hpp"

namespace brwlaw {

enum class SampleKind { W, W1, Yule, Vt, SelfDecompLHS, SelfDecompRHS };

inline std::string_view to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::W: return "W";
    case SampleKind::W1: return "W1";
    case SampleKind::Yule: return "Yule";
    case SampleKind::Vt: return "Vt";
    case SampleKind::SelfDecompLHS: return "SelfDecompLHS";
    case SampleKind::SelfDecompRHS: return "SelfDecompRHS";
  }
  return "?";
}

inline SampleKind parse_sample_kind(std::string_view name) {
  for (auto kind : {SampleKind::W, SampleKind::W1, SampleKind::Yule, SampleKind::Vt,
                    SampleKind::SelfDecompLHS, SampleKind::SelfDecompRHS}) {
    if (to_string(kind) == name) return kind;
  }
  throw DomainError("unknown sample kind '" + std::string(name) + "'");
}

enum class PruneMode { conditional_mean, drop };

inline std::string_view to_string(PruneMode mode) {
  return mode == PruneMode::conditional_mean ? "conditional" : "drop";
}

inline PruneMode parse_prune_mode(std::string_view name) {
  if (name == "conditional") return PruneMode::conditional_mean;
  if (name == "drop") return PruneMode::drop;
  throw DomainError("unknown prune mode '" + std::string(name) + "'");
}

/// Regularized upper incomplete gamma Q(a, x), with closed forms for small
/// integer a (the alpha = 1 cases that dominate the hot loop).
inline double gamma_q(double a, double x) {
  if (!(x > 0.0)) return 1.0;
  if (a == 1.0) return std::exp(-x);
  if (a == 2.0) return (1.0 + x) * std::exp(-x);
  return boost::math::gamma_q(a, x);
}

struct ModelParams {
  double alpha = 1.0;
  /// Offspring are never revealed outside {t' + x' <= trunc_T}.
  double trunc_T = 25.0;
  /// Atoms whose normalized weight falls below this are not revealed.
  double prune_eps = 1e-3;
  int n_generations = 12;
  std::uint64_t seed = 0;
  PruneMode mode = PruneMode::conditional_mean;
  /// Allowed discarded expected mass per sample.
  double bias_budget = 1e-4;
  /// Per-sample cap on revealed atoms.
  std::size_t max_atoms = 5'000'000;

  /// E W^2 = 1 / (1 - 2^{-(1 + alpha)}).
  double second_moment() const { return 1.0 / (1.0 - std::exp2(-(1.0 + alpha))); }

  /// Expected mass outside the truncation triangle, Q(alpha + 1, T).
  double truncation_mass() const { return gamma_q(alpha + 1.0, trunc_T); }

  void validate() const {
    std::ostringstream msg;
    if (!(alpha > 0.0) || !std::isfinite(alpha)) msg << "alpha must be positive; ";
    if (!(trunc_T > 0.0) || !std::isfinite(trunc_T)) msg << "trunc_T must be positive; ";
    if (!(prune_eps > 0.0 && prune_eps < 1.0)) msg << "prune_eps must lie in (0, 1); ";
    if (n_generations < 0) msg << "n_generations must be nonnegative; ";
    if (!(bias_budget > 0.0)) msg << "bias_budget must be positive; ";
    if (max_atoms == 0) msg << "max_atoms must be positive; ";
    if (msg.str().empty() && mode == PruneMode::drop) {
      if (prune_eps > std::exp(-trunc_T)) {
        msg << "drop mode needs prune_eps <= e^{-trunc_T} = " << std::exp(-trunc_T)
            << " so that the truncation, not pruning, bounds the discarded mass; ";
      }
      if (truncation_mass() > bias_budget) {
        msg << "truncation mass Q(alpha+1, T) = " << truncation_mass()
            << " exceeds bias_budget " << bias_budget << "; ";
      }
    }
    if (!msg.str().empty()) throw DomainError("ModelParams: " + msg.str());
  }
};

struct Atom {
  double t = 0.0;
  double x = 0.0;
  double weight = 1.0;  ///< e^{-(t + x)}
  std::uint64_t key = 0;
  int depth = 0;
};

/// Result of one simulated sample.
struct TreeEstimate {
  double value = 0.0;
  /// Expected mass not represented in `value` (nonzero only in drop mode).
  double pruned_mass = 0.0;
  /// Conditional variance of the exact quantity given the revealed atoms
  /// (an upper bound for V_t).
  double residual_variance = 0.0;
  std::size_t atoms = 0;
};

/// Per-generation martingale diagnostic: entry n is E[W_n | revealed atoms]
/// (drop mode: the revealed part of W_n).
using DepthProfile = std::vector<double>;

namespace detail {

// Poisson shells of the offspring process. For the plane process shell j
// has mean ((j+1)^{alpha+1} - j^{alpha+1}) / Gamma(alpha + 2); for the line
// process (Yule) each unit shell has mean 1.
class ShellSampler {
 public:
  ShellSampler(double alpha, bool line) : alpha_(alpha), line_(line) {}

  double alpha() const { return alpha_; }
  bool line() const { return line_; }

  // Calls f(t', x', child_key) for each point of shell j. The line process
  // reports t' = 0.
  template <typename F>
  void for_each(std::uint64_t key, std::size_t j, F&& f) {
    ensure(j);
    SplitMix64 engine(mix_key(key, 2 * j));
    std::poisson_distribution<int> count(params_[j]);
    const int n = count(engine);
    for (int i = 0; i < n; ++i) {
      const std::uint64_t child = mix_key(key, 2 * j + 1, static_cast<std::uint64_t>(i));
      const double u = open_uniform(engine);
      if (line_) {
        f(0.0, static_cast<double>(j) + u, child);
        continue;
      }
      const double v = open_uniform(engine);
      double s, x;
      if (alpha_ == 1.0) {
        s = std::sqrt(powers_[j] + u * (powers_[j + 1] - powers_[j]));
        x = s * v;
      } else {
        s = std::pow(powers_[j] + u * (powers_[j + 1] - powers_[j]), 1.0 / (alpha_ + 1.0));
        x = s * std::pow(v, 1.0 / alpha_);
      }
      f(s - x, x, child);
    }
  }

 private:
  void ensure(std::size_t j) {
    while (params_.size() <= j) {
      const double k = static_cast<double>(params_.size());
      if (powers_.empty()) powers_.push_back(0.0);
      powers_.push_back(std::pow(k + 1.0, alpha_ + 1.0));
      const double mean =
          line_ ? 1.0 : (powers_[params_.size() + 1] - powers_[params_.size()]) /
                            std::tgamma(alpha_ + 2.0);
      params_.emplace_back(mean);
    }
  }

  double alpha_;
  bool line_;
  std::vector<std::poisson_distribution<int>::param_type> params_;
  std::vector<double> powers_;  // k^{alpha+1}
};

inline ShellSampler& thread_sampler(double alpha, bool line) {
  thread_local std::optional<ShellSampler> sampler;
  if (!sampler || sampler->alpha() != alpha || sampler->line() != line) {
    sampler.emplace(alpha, line);
  }
  return *sampler;
}

struct Frame {
  double ell;  // normalized log weight
  std::uint64_t key;
  int depth;
  double t;  // only used by the time-slice walk
  double x;
};

inline std::vector<Frame>& thread_stack() {
  thread_local std::vector<Frame> stack;
  stack.clear();
  return stack;
}

inline void count_atom(TreeEstimate& out, const ModelParams& params) {
  if (++out.atoms > params.max_atoms) {
    std::ostringstream msg;
    msg << "sample exceeded " << params.max_atoms
        << " revealed atoms; increase prune_eps (now " << params.prune_eps << ")";
    throw ResourceError(msg.str());
  }
}

inline std::size_t shell_count(double extent) {
  return extent > 0.0 ? static_cast<std::size_t>(std::ceil(extent)) : 0;
}

// Explores the plane tree below the frames already on `stack`, with weights
// e^{-theta1 t - theta2 x} / m(theta). `profile`, when given, receives the
// revealed weight per depth (entries 0..n) and the unrevealed expected mass
// per depth (entries n+1..2n+1).
inline void explore_plane(std::vector<Frame>& stack, const ModelParams& params, double theta1,
                          double theta2, TreeEstimate& out, std::vector<double>* profile) {
  ShellSampler& sampler = thread_sampler(params.alpha, false);
  const double a1 = params.alpha + 1.0;
  const double mu2 = params.second_moment();
  const double var_scale = mu2 * std::exp2(-a1);
  const double log_m = -std::log(theta1) - params.alpha * std::log(theta2);
  const double log_eps = std::log(params.prune_eps);
  const double stretch = 1.0 / std::min(theta1, theta2);
  const int n = params.n_generations;
  double leaves = 0.0;
  double remainder = 0.0;
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    count_atom(out, params);
    const double w = std::exp(f.ell);
    if (profile) (*profile)[f.depth] += w;
    if (f.depth >= n) {
      leaves += w;
      out.residual_variance += w * w * (mu2 - 1.0);
      continue;
    }
    const double L = std::min(params.trunc_T, f.ell - log_m - log_eps);
    const double rest = w * gamma_q(a1, L);
    remainder += rest;
    out.residual_variance += w * w * var_scale * gamma_q(a1, 2.0 * L);
    if (profile) (*profile)[n + 1 + f.depth + 1] += rest;
    const std::size_t shells = shell_count(L * stretch);
    for (std::size_t j = 0; j < shells; ++j) {
      sampler.for_each(f.key, j, [&](double t, double x, std::uint64_t child) {
        const double d = theta1 * t + theta2 * x;
        if (d <= L) stack.push_back(Frame{f.ell - d - log_m, child, f.depth + 1, 0.0, 0.0});
      });
    }
  }
  if (params.mode == PruneMode::conditional_mean) {
    out.value += leaves + remainder;
  } else {
    out.value += leaves;
    out.pruned_mass += remainder;
    out.residual_variance = 0.0;
  }
}

}  // namespace detail

/// Offspring of `parent` inside the truncation triangle {t' + x' <= trunc_T}.
inline std::vector<Atom> sample_offspring(const Atom& parent, const ModelParams& params) {
  params.validate();
  auto& sampler = detail::thread_sampler(params.alpha, false);
  std::vector<Atom> children;
  const std::size_t shells = detail::shell_count(params.trunc_T);
  for (std::size_t j = 0; j < shells; ++j) {
    sampler.for_each(parent.key, j, [&](double t, double x, std::uint64_t child) {
      if (t + x > params.trunc_T) return;
      Atom a;
      a.t = parent.t + t;
      a.x = parent.x + x;
      a.weight = std::exp(-(a.t + a.x));
      a.key = child;
      a.depth = parent.depth + 1;
      children.push_back(a);
    });
  }
  return children;
}

/// Stream families. Samples with the same family and index share a tree.
inline constexpr std::string_view kTreeStream = "tree";
inline constexpr std::string_view kLhsStream = "selfdecomp-lhs";
inline constexpr std::string_view kRhsStream = "selfdecomp-rhs";
inline constexpr std::string_view kRhsTailStream = "selfdecomp-rhs-tail";
inline constexpr std::string_view kYuleStream = "yule";

inline std::string tilt_stream(double c) {
  std::ostringstream label;
  label << "tilt/" << std::hexfloat << c;
  return label.str();
}

/// W estimate from the tree rooted at `key`, with tilt c (weights
/// e^{-c t - x / c} / m). Fills `profile` with n + 1 per-depth values if given.
inline TreeEstimate simulate_W_from_key(std::uint64_t key, const ModelParams& params,
                                        double tilt = 1.0, DepthProfile* profile = nullptr) {
  if (!(tilt > 0.0) || !std::isfinite(tilt)) throw DomainError("simulate_W: tilt must be positive");
  auto& stack = detail::thread_stack();
  stack.push_back(detail::Frame{0.0, key, 0, 0.0, 0.0});
  TreeEstimate out;
  const int n = params.n_generations;
  std::vector<double> raw;
  if (profile) raw.assign(2 * static_cast<std::size_t>(n) + 2, 0.0);
  detail::explore_plane(stack, params, tilt, 1.0 / tilt, out, profile ? &raw : nullptr);
  if (profile) {
    profile->assign(static_cast<std::size_t>(n) + 1, 0.0);
    double unrevealed = 0.0;
    for (int d = 0; d <= n; ++d) {
      if (params.mode == PruneMode::conditional_mean) unrevealed += raw[n + 1 + d];
      (*profile)[d] = raw[d] + unrevealed;
    }
  }
  return out;
}

inline TreeEstimate simulate_W(const ModelParams& params, std::uint64_t index, double tilt = 1.0,
                               DepthProfile* profile = nullptr) {
  const std::uint64_t key = tilt == 1.0 ? root_key(params.seed, kTreeStream, index)
                                        : root_key(params.seed, tilt_stream(tilt), index);
  return simulate_W_from_key(key, params, tilt, profile);
}

/// First-generation value: the sum of e^{-t'-x'} over the offspring in the
/// truncation triangle. pruned_mass is Q(alpha + 1, T).
inline TreeEstimate simulate_W1(const ModelParams& params, std::uint64_t index) {
  auto& sampler = detail::thread_sampler(params.alpha, false);
  const std::uint64_t key = root_key(params.seed, kTreeStream, index);
  TreeEstimate out;
  const std::size_t shells = detail::shell_count(params.trunc_T);
  for (std::size_t j = 0; j < shells; ++j) {
    sampler.for_each(key, j, [&](double t, double x, std::uint64_t) {
      if (t + x <= params.trunc_T) {
        out.value += std::exp(-(t + x));
        ++out.atoms;
      }
    });
  }
  out.pruned_mass = params.truncation_mass();
  return out;
}

/// Expected mass and conditional variance of the root offspring in
/// {t' < s, t' + x' > L}, the part of A_s that is not revealed.
struct SplitRemainder {
  double mass = 0.0;
  double variance = 0.0;
};

inline SplitRemainder selfdecomp_remainder(double s, const ModelParams& params) {
  const double alpha = params.alpha;
  const double L = std::min(params.trunc_T, -std::log(params.prune_eps));
  const double head = std::min(s, L);
  QuadratureSpec quad;
  quad.abs_tol = 1e-14;
  quad.rel_tol = 1e-12;
  SplitRemainder r;
  if (head > 0.0) {
    r.mass = integrate_adaptive(
        [&](double t) { return std::exp(-t) * gamma_q(alpha, L - t); }, 0.0, head, quad);
    r.variance = integrate_adaptive(
        [&](double t) { return std::exp(-2.0 * t) * gamma_q(alpha, 2.0 * (L - t)); }, 0.0, head,
        quad);
  }
  if (s > L) {
    r.mass += std::exp(-L) - std::exp(-s);
    r.variance += 0.5 * (std::exp(-2.0 * L) - std::exp(-2.0 * s));
  }
  r.variance *= params.second_moment() * std::exp2(-alpha);
  return r;
}

/// (lhs, rhs) for the self-decomposition W = e^{-s} W' + A_s: lhs is an
/// independent W; rhs combines an independent W' with A_s built from the
/// root offspring with t' < s. `remainder` may be passed in to avoid
/// recomputing it per sample.
inline std::pair<TreeEstimate, TreeEstimate> simulate_selfdecomp_pair(
    double s, const ModelParams& params, std::uint64_t index,
    std::optional<SplitRemainder> remainder = std::nullopt) {
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("selfdecomp: s must be positive");
  const SplitRemainder rem = remainder ? *remainder : selfdecomp_remainder(s, params);
  TreeEstimate lhs = simulate_W_from_key(root_key(params.seed, kLhsStream, index), params);
  TreeEstimate tail = simulate_W_from_key(root_key(params.seed, kRhsTailStream, index), params);

  TreeEstimate rhs;
  const double shrink = std::exp(-s);
  rhs.value = shrink * tail.value;
  rhs.pruned_mass = shrink * tail.pruned_mass;
  rhs.residual_variance = shrink * shrink * tail.residual_variance;
  rhs.atoms = tail.atoms;

  const double L = std::min(params.trunc_T, -std::log(params.prune_eps));
  const std::uint64_t key = root_key(params.seed, kRhsStream, index);
  auto& stack = detail::thread_stack();
  auto& sampler = detail::thread_sampler(params.alpha, false);
  const std::size_t shells = detail::shell_count(L);
  for (std::size_t j = 0; j < shells; ++j) {
    sampler.for_each(key, j, [&](double t, double x, std::uint64_t child) {
      if (t < s && t + x <= L) stack.push_back(detail::Frame{-(t + x), child, 1, 0.0, 0.0});
    });
  }
  if (params.n_generations == 0) {
    // No generation below the root is revealed; A_s enters through its mean.
    stack.clear();
    rhs.value += 1.0 - shrink;
    return {lhs, rhs};
  }
  detail::explore_plane(stack, params, 1.0, 1.0, rhs, nullptr);
  if (params.mode == PruneMode::conditional_mean) {
    rhs.value += rem.mass;
    rhs.residual_variance += rem.variance;
  } else {
    rhs.pruned_mass += rem.mass;
  }
  return {lhs, rhs};
}

/// Yule analog on the half-line: unit-rate Poisson offspring, weights e^{-x}.
/// The terminal value is standard exponential.
inline TreeEstimate simulate_yule_W(const ModelParams& params, std::uint64_t index) {
  auto& sampler = detail::thread_sampler(1.0, true);
  auto& stack = detail::thread_stack();
  stack.push_back(detail::Frame{0.0, root_key(params.seed, kYuleStream, index), 0, 0.0, 0.0});
  const double log_eps = std::log(params.prune_eps);
  TreeEstimate out;
  double leaves = 0.0;
  double remainder = 0.0;
  while (!stack.empty()) {
    const detail::Frame f = stack.back();
    stack.pop_back();
    detail::count_atom(out, params);
    const double w = std::exp(f.ell);
    if (f.depth >= params.n_generations) {
      leaves += w;
      out.residual_variance += w * w;
      continue;
    }
    const double L = std::min(params.trunc_T, f.ell - log_eps);
    const double tail = std::exp(-L);
    remainder += w * tail;
    out.residual_variance += w * w * tail * tail;
    const std::size_t shells = detail::shell_count(L);
    for (std::size_t j = 0; j < shells; ++j) {
      sampler.for_each(f.key, j, [&](double, double x, std::uint64_t child) {
        if (x <= L) stack.push_back(detail::Frame{f.ell - x, child, f.depth + 1, 0.0, 0.0});
      });
    }
  }
  if (params.mode == PruneMode::conditional_mean) {
    out.value = leaves + remainder;
  } else {
    out.value = leaves;
    out.pruned_mass = remainder;
    out.residual_variance = 0.0;
  }
  return out;
}

/// V_t(theta) = e^{-t theta^{-alpha}} sum over atoms of all generations with
/// time coordinate <= t of e^{-theta x}, on the tree rooted at `key`.
/// The generation cap does not apply; exploration stops by weight alone.
inline TreeEstimate simulate_Vt_from_key(std::uint64_t key, double theta, double t_slice,
                                         const ModelParams& params) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("simulate_Vt: theta must be positive");
  if (!(t_slice > 0.0) || !std::isfinite(t_slice)) {
    throw DomainError("simulate_Vt: t_slice must be positive");
  }
  const double alpha = params.alpha;
  const double c = std::pow(theta, -alpha);   // offspring mass per unit time
  const double c2 = std::pow(2.0 * theta, -alpha);
  const double log_eps = std::log(params.prune_eps);
  // int_0^tau E[S_u^2] du for the unnormalized slice sum S started at one atom.
  auto second_moment_integral = [&](double tau) {
    const double a = std::expm1(2.0 * c * tau) / (2.0 * c);
    const double b = std::expm1(c2 * tau) / c2;
    return a + c2 / (2.0 * c - c2) * (a - b);
  };
  auto& sampler = detail::thread_sampler(alpha, false);
  auto& stack = detail::thread_stack();
  stack.push_back(detail::Frame{0.0, key, 0, 0.0, 0.0});
  TreeEstimate out;
  double total = 0.0;
  while (!stack.empty()) {
    const detail::Frame f = stack.back();
    stack.pop_back();
    detail::count_atom(out, params);
    const double tau = t_slice - f.t;
    const double log_w = -theta * f.x - c * t_slice;  // normalized own weight
    total += std::exp(log_w);
    const double X = std::max(0.0, (-theta * f.x - c * f.t - log_eps) / theta);
    const double rest = std::exp(log_w) * std::expm1(c * tau) * gamma_q(alpha, theta * X);
    total += rest;
    out.residual_variance += std::exp(2.0 * log_w) * c2 * second_moment_integral(tau) *
                             gamma_q(alpha, 2.0 * theta * X);
    if (!(X > 0.0)) continue;
    const std::size_t shells = detail::shell_count(tau + X);
    for (std::size_t j = 0; j < shells; ++j) {
      sampler.for_each(f.key, j, [&](double dt, double dx, std::uint64_t child) {
        if (dt <= tau && dx <= X) {
          stack.push_back(detail::Frame{0.0, child, f.depth + 1, f.t + dt, f.x + dx});
        }
      });
    }
  }
  out.value = total;
  return out;
}

inline TreeEstimate simulate_Vt(double theta, double t_slice, const ModelParams& params,
                                std::uint64_t index) {
  return simulate_Vt_from_key(root_key(params.seed, kTreeStream, index), theta, t_slice, params);
}

}  // namespace brwlaw

namespace brwlaw {

/// A batch of independent samples of one kind.
struct SampleBatch {
  SampleKind kind = SampleKind::W;
  ModelParams params{};
  std::vector<double> values;
  /// Sum over samples of the discarded expected mass.
  double pruned_mass_bound = 0.0;
  /// Sum over samples of the conditional variance left out of each value.
  double residual_variance = 0.0;
  std::size_t atoms = 0;
  /// Kind-specific settings: tilt c for W, split point s for the
  /// self-decomposition, (theta, t_slice) for V_t.
  double tilt = 1.0;
  double split_s = 0.0;
  double theta = 0.0;
  double t_slice = 0.0;
  /// V_t only: the W estimate on the same tree, when requested.
  std::vector<double> coupled;
  /// W only: row-major per-sample depth profiles (n_generations + 1 columns).
  std::vector<double> depth_profiles;

  std::size_t size() const { return values.size(); }
  double budget() const { return params.bias_budget * static_cast<double>(values.size()); }
  std::size_t profile_width() const { return static_cast<std::size_t>(params.n_generations) + 1; }
};

struct BatchOptions {
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;
  /// First sample index (batches with disjoint index ranges are independent).
  std::uint64_t first_index = 0;
  double tilt = 1.0;
  double split_s = 1.0;
  double theta = 1.0;
  double t_slice = 1.0;
  bool record_depths = false;
  bool couple_w = false;
};

/// Runs body(i) for i in [0, n) on `threads` workers with a static partition.
/// Exceptions from workers are rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      const std::size_t lo = n * w / threads;
      const std::size_t hi = n * (w + 1) / threads;
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace detail {

inline void check_budget(const SampleBatch& batch) {
  if (batch.pruned_mass_bound > batch.budget()) {
    std::ostringstream msg;
    msg.precision(6);
    msg << to_string(batch.kind) << " batch discarded expected mass " << batch.pruned_mass_bound
        << " over " << batch.size() << " samples, above the budget " << batch.budget()
        << "; raise trunc_T or lower prune_eps";
    throw BudgetExceededError(msg.str());
  }
}

inline void collect(SampleBatch& batch, const std::vector<TreeEstimate>& estimates) {
  batch.values.resize(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    batch.values[i] = estimates[i].value;
    batch.pruned_mass_bound += estimates[i].pruned_mass;
    batch.residual_variance += estimates[i].residual_variance;
    batch.atoms += estimates[i].atoms;
  }
}

}  // namespace detail

/// Simulates n samples of `kind` (not the self-decomposition sides; see
/// run_selfdecomp_batches). Sample i uses stream index first_index + i, so
/// results do not depend on the thread count.
inline SampleBatch run_batch(SampleKind kind, const ModelParams& params, std::size_t n,
                             const BatchOptions& options = {}) {
  params.validate();
  if (kind == SampleKind::SelfDecompLHS || kind == SampleKind::SelfDecompRHS) {
    throw DomainError("run_batch: use run_selfdecomp_batches for the self-decomposition pair");
  }
  SampleBatch batch;
  batch.kind = kind;
  batch.params = params;
  std::vector<TreeEstimate> estimates(n);
  const std::size_t width = batch.profile_width();
  switch (kind) {
    case SampleKind::W: {
      batch.tilt = options.tilt;
      if (options.record_depths) batch.depth_profiles.assign(n * width, 0.0);
      parallel_for(n, options.threads, [&](std::size_t i) {
        DepthProfile profile;
        estimates[i] = simulate_W(params, options.first_index + i, options.tilt,
                                  options.record_depths ? &profile : nullptr);
        if (options.record_depths) {
          std::copy(profile.begin(), profile.end(), batch.depth_profiles.begin() + i * width);
        }
      });
      break;
    }
    case SampleKind::W1:
      parallel_for(n, options.threads, [&](std::size_t i) {
        estimates[i] = simulate_W1(params, options.first_index + i);
      });
      break;
    case SampleKind::Yule:
      parallel_for(n, options.threads, [&](std::size_t i) {
        estimates[i] = simulate_yule_W(params, options.first_index + i);
      });
      break;
    case SampleKind::Vt: {
      batch.theta = options.theta;
      batch.t_slice = options.t_slice;
      if (options.couple_w) batch.coupled.assign(n, 0.0);
      parallel_for(n, options.threads, [&](std::size_t i) {
        estimates[i] = simulate_Vt(options.theta, options.t_slice, params, options.first_index + i);
        if (options.couple_w) batch.coupled[i] = simulate_W(params, options.first_index + i).value;
      });
      break;
    }
    default:
      break;
  }
  detail::collect(batch, estimates);
  detail::check_budget(batch);
  return batch;
}

/// The two sides of the self-decomposition at split point options.split_s.
inline std::pair<SampleBatch, SampleBatch> run_selfdecomp_batches(const ModelParams& params,
                                                                  std::size_t n,
                                                                  const BatchOptions& options = {}) {
  params.validate();
  const double s = options.split_s;
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("selfdecomp: s must be positive");
  const SplitRemainder remainder = selfdecomp_remainder(s, params);
  std::vector<TreeEstimate> lhs(n), rhs(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    auto pair = simulate_selfdecomp_pair(s, params, options.first_index + i, remainder);
    lhs[i] = pair.first;
    rhs[i] = pair.second;
  });
  SampleBatch a, b;
  a.kind = SampleKind::SelfDecompLHS;
  b.kind = SampleKind::SelfDecompRHS;
  a.params = b.params = params;
  a.split_s = b.split_s = s;
  detail::collect(a, lhs);
  detail::collect(b, rhs);
  detail::check_budget(a);
  detail::check_budget(b);
  return {std::move(a), std::move(b)};
}

}  // namespace brwlaw
