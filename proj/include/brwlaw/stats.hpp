#pragma once

// Statistics over sample batches: means with standard errors, tail-slope
// regression, Kolmogorov-Smirnov tests, chi-square goodness of fit and
// Gaussian kernel density estimates with mode counting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/statistics/linear_regression.hpp>
#include <boost/math/statistics/univariate_statistics.hpp>

#include "brwlaw/errors.hpp"
#include "brwlaw/simulator.hpp"
#include "brwlaw/special_functions.hpp"

namespace brwlaw {

struct EstimateWithSE {
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;

  /// |value - target| in units of se (infinite if se = 0 and they differ).
  double z(double target) const {
    const double gap = std::abs(value - target);
    if (se > 0.0) return gap / se;
    return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  bool within(double target, double k_se) const { return z(target) <= k_se; }
};

namespace detail {

inline void require_samples(std::size_t n, std::size_t minimum, const char* name) {
  if (n < minimum) {
    std::ostringstream msg;
    msg << name << ": need at least " << minimum << " samples, got " << n;
    throw InsufficientDataError(msg.str());
  }
}

}  // namespace detail

/// Sample mean with standard error sd / sqrt(n).
inline EstimateWithSE mean_estimate(std::span<const double> values) {
  detail::require_samples(values.size(), 2, "mean_estimate");
  auto [mean, var] = boost::math::statistics::mean_and_sample_variance(values.begin(), values.end());
  return {mean, std::sqrt(var / static_cast<double>(values.size())), values.size()};
}

/// Mean of f(value) with its standard error.
template <typename F>
EstimateWithSE transformed_mean(std::span<const double> values, F&& f) {
  std::vector<double> mapped(values.size());
  std::transform(values.begin(), values.end(), mapped.begin(), f);
  return mean_estimate(mapped);
}

/// Raw moment E X^k.
inline EstimateWithSE moment_estimate(std::span<const double> values, int k) {
  return transformed_mean(values, [k](double v) { return std::pow(v, k); });
}

/// E e^{rX} from plain values (no domain check).
inline EstimateWithSE empirical_mgf(std::span<const double> values, double r) {
  if (r == 0.0) return {1.0, 0.0, values.size()};
  return transformed_mean(values, [r](double v) { return std::exp(r * v); });
}

/// E e^{rW} from a batch. For W-type batches, r must stay below r*/2: beyond
/// that e^{rW} has infinite variance and the standard error is meaningless.
inline EstimateWithSE empirical_mgf(const SampleBatch& batch, double r,
                                    const LawTables& tables = default_law_tables()) {
  const bool w_like = batch.kind == SampleKind::W || batch.kind == SampleKind::SelfDecompLHS ||
                      batch.kind == SampleKind::SelfDecompRHS;
  if (w_like && !(r < 0.5 * tables.r_star())) {
    std::ostringstream msg;
    msg << "empirical_mgf: r = " << r << " >= r*/2 = " << 0.5 * tables.r_star()
        << "; e^{rW} has unbounded variance there, refusing";
    throw DomainError(msg.str());
  }
  return empirical_mgf(std::span<const double>(batch.values), r);
}

/// log E e^{rX} with a delta-method standard error.
inline EstimateWithSE empirical_log_mgf(std::span<const double> values, double r) {
  const auto m = empirical_mgf(values, r);
  return {std::log(m.value), m.se / m.value, m.n};
}

/// Pearson correlation of paired samples.
inline double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("correlation: sizes differ");
  detail::require_samples(a.size(), 2, "correlation");
  return boost::math::statistics::correlation_coefficient(a, b);
}

struct TailFit {
  double slope = 0.0;
  double intercept = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::size_t n_tail = 0;    ///< samples above x_lo
  std::size_t n_points = 0;  ///< distinct order statistics used in the fit
};

/// Least-squares fit of -log(empirical survival) + adjust(x) against x over
/// the distinct order statistics in [x_lo, x_hi] (the sample maximum is
/// excluded, its empirical survival being zero).
template <typename Adjust>
TailFit tail_slope_adjusted(std::span<const double> values, double x_lo, double x_hi,
                            Adjust&& adjust, std::size_t min_tail = 100) {
  if (!(x_lo < x_hi)) throw DomainError("tail_slope: need x_lo < x_hi");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  TailFit fit;
  fit.x_lo = x_lo;
  fit.x_hi = x_hi;
  fit.n_tail = static_cast<std::size_t>(sorted.end() -
                                        std::upper_bound(sorted.begin(), sorted.end(), x_lo));
  if (fit.n_tail < min_tail) {
    std::ostringstream msg;
    msg << "tail_slope: only " << fit.n_tail << " samples above " << x_lo << " (need "
        << min_tail << ")";
    throw InsufficientDataError(msg.str());
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 < n && sorted[i + 1] == sorted[i]) continue;  // last copy of a tie
    const double x = sorted[i];
    if (x < x_lo || x > x_hi) continue;
    const std::size_t above = n - 1 - i;
    if (above == 0) continue;
    xs.push_back(x);
    ys.push_back(-std::log(static_cast<double>(above) / static_cast<double>(n)) + adjust(x));
  }
  fit.n_points = xs.size();
  if (xs.size() < 2) throw InsufficientDataError("tail_slope: fewer than two fit points");
  auto [c0, c1] = boost::math::statistics::simple_ordinary_least_squares(xs, ys);
  fit.intercept = c0;
  fit.slope = c1;
  return fit;
}

inline TailFit tail_slope(std::span<const double> values, double x_lo, double x_hi,
                          std::size_t min_tail = 100) {
  return tail_slope_adjusted(values, x_lo, x_hi, [](double) { return 0.0; }, min_tail);
}

/// -log P(X < x) / ((log x)^2 / 2) with a delta-method standard error.
inline EstimateWithSE left_tail_ratio(std::span<const double> values, double x) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("left_tail_ratio: x must lie in (0, 1)");
  const double n = static_cast<double>(values.size());
  const double below = static_cast<double>(
      std::count_if(values.begin(), values.end(), [x](double v) { return v < x; }));
  if (below == 0.0) {
    std::ostringstream msg;
    msg << "left_tail_ratio: no samples below " << x;
    throw InsufficientDataError(msg.str());
  }
  const double p = below / n;
  const double scale = 0.5 * std::log(x) * std::log(x);
  const double se_p = std::sqrt(p * (1.0 - p) / n);
  return {-std::log(p) / scale, se_p / (p * scale), values.size()};
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
  double effective_n = 0.0;
};

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}.
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// p-value for statistic d at effective size n, with Stephens' small-sample
/// correction lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) d.
inline double ks_p_value(double d, double effective_n) {
  const double root = std::sqrt(effective_n);
  return kolmogorov_q((root + 0.12 + 0.11 / root) * d);
}

inline constexpr std::size_t kMinKsSamples = 50;

namespace detail {

inline void require_ks_power(std::size_t n, const char* name) {
  if (n < kMinKsSamples) {
    std::ostringstream msg;
    msg << name << ": " << n << " samples is underpowered (need " << kMinKsSamples << ")";
    throw UnderpoweredError(msg.str());
  }
}

}  // namespace detail

/// One-sample KS test against a continuous CDF.
template <typename Cdf>
KsResult ks_one_sample(std::span<const double> values, Cdf&& cdf) {
  detail::require_ks_power(values.size(), "ks_one_sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n), n};
}

/// One-sample KS test against the standard exponential law.
inline KsResult ks_one_sample_exp(std::span<const double> values) {
  return ks_one_sample(values, [](double x) { return x > 0.0 ? -std::expm1(-x) : 0.0; });
}

/// Two-sample KS test with effective size n m / (n + m).
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  detail::require_ks_power(a.size(), "ks_two_sample");
  detail::require_ks_power(b.size(), "ks_two_sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = n * m / (n + m);
  return {d, ks_p_value(d, ne), ne};
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
};

/// Pearson chi-square test of nonnegative integer counts against
/// Poisson(mean). Cells are merged from the right until each expects >= 5.
inline ChiSquareResult chi_square_poisson(std::span<const int> counts, double mean) {
  if (!(mean > 0.0)) throw DomainError("chi_square_poisson: mean must be positive");
  detail::require_samples(counts.size(), 50, "chi_square_poisson");
  const double n = static_cast<double>(counts.size());
  int top = 0;
  for (int c : counts) top = std::max(top, c);
  std::vector<double> observed(static_cast<std::size_t>(top) + 1, 0.0);
  for (int c : counts) {
    if (c < 0) throw DomainError("chi_square_poisson: negative count");
    observed[static_cast<std::size_t>(c)] += 1.0;
  }
  // Poisson probabilities, the last cell taking the whole upper tail.
  std::vector<double> expected(observed.size());
  double pk = std::exp(-mean);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    expected[k] = n * pk;
    cumulative += pk;
    pk *= mean / static_cast<double>(k + 1);
  }
  expected.back() += n * std::max(0.0, 1.0 - cumulative);
  // Merge low-expectation cells: from the left into the first big cell, and
  // from the right into the tail.
  std::vector<double> obs_cells, exp_cells;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    o_acc += observed[k];
    e_acc += expected[k];
    if (e_acc >= 5.0) {
      obs_cells.push_back(o_acc);
      exp_cells.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (exp_cells.empty()) {
      obs_cells.push_back(o_acc);
      exp_cells.push_back(e_acc);
    } else {
      obs_cells.back() += o_acc;
      exp_cells.back() += e_acc;
    }
  }
  ChiSquareResult r;
  for (std::size_t k = 0; k < obs_cells.size(); ++k) {
    const double diff = obs_cells[k] - exp_cells[k];
    r.statistic += diff * diff / exp_cells[k];
  }
  r.dof = static_cast<int>(obs_cells.size()) - 1;
  if (r.dof < 1) throw InsufficientDataError("chi_square_poisson: fewer than two cells");
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

inline constexpr std::size_t kKdeGridSize = 2048;

/// Gaussian kernel density estimate on a uniform grid over
/// [0, max sample + 3 bandwidths].
struct Kde {
  double bandwidth = 0.0;
  double lo = 0.0;
  double step = 0.0;
  std::size_t n = 0;
  std::vector<double> grid;
  std::vector<double> density;

  /// Linear interpolation of the density at x (zero outside the grid).
  double at(double x) const {
    if (x < lo || x > grid.back()) return 0.0;
    const double pos = (x - lo) / step;
    const auto i = std::min(static_cast<std::size_t>(pos), grid.size() - 2);
    const double frac = pos - static_cast<double>(i);
    return density[i] * (1.0 - frac) + density[i + 1] * frac;
  }

  /// Pointwise standard error sqrt(f R(K) / (n h)), R(K) = 1 / (2 sqrt(pi)).
  double standard_error(double f) const {
    const double roughness = 0.5 / std::sqrt(std::numbers::pi);
    return std::sqrt(std::max(f, 0.0) * roughness / (static_cast<double>(n) * bandwidth));
  }

  /// Trapezoid rule over the grid.
  double integral() const {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < density.size(); ++i) sum += density[i] + density[i + 1];
    return 0.5 * step * sum;
  }
};

/// Silverman's rule 0.9 min(sd, IQR / 1.34) n^{-1/5}.
inline double silverman_bandwidth(std::span<const double> values) {
  detail::require_samples(values.size(), 2, "silverman_bandwidth");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < sorted.size() ? sorted[i] * (1.0 - frac) + sorted[i + 1] * frac : sorted[i];
  };
  const double sd = std::sqrt(boost::math::statistics::sample_variance(sorted));
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) throw DomainError("silverman_bandwidth: degenerate sample");
  return 0.9 * spread * std::pow(static_cast<double>(sorted.size()), -0.2);
}

/// KDE with linear binning onto the grid followed by a discrete convolution
/// with the Gaussian kernel (truncated at 8 bandwidths).
inline Kde kde(std::span<const double> values, double bandwidth) {
  if (!(bandwidth > 0.0)) throw DomainError("kde: bandwidth must be positive");
  detail::require_samples(values.size(), 2, "kde");
  const double top = *std::max_element(values.begin(), values.end()) + 3.0 * bandwidth;
  Kde k;
  k.bandwidth = bandwidth;
  k.n = values.size();
  k.lo = 0.0;
  k.step = (top - k.lo) / static_cast<double>(kKdeGridSize - 1);
  k.grid.resize(kKdeGridSize);
  for (std::size_t i = 0; i < kKdeGridSize; ++i) k.grid[i] = k.lo + k.step * static_cast<double>(i);

  // Bins extended below 0 so that kernel mass of samples near 0 is binned
  // faithfully before being evaluated on the grid.
  const auto pad = static_cast<std::size_t>(std::ceil(8.0 * bandwidth / k.step)) + 1;
  std::vector<double> bins(kKdeGridSize + 2 * pad, 0.0);
  for (double v : values) {
    const double pos = (v - k.lo) / k.step + static_cast<double>(pad);
    if (pos < 0.0 || pos >= static_cast<double>(bins.size() - 1)) continue;
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    bins[i] += 1.0 - frac;
    bins[i + 1] += frac;
  }
  std::vector<double> kernel(2 * pad + 1);
  const double norm = 1.0 / (static_cast<double>(k.n) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t d = 0; d < kernel.size(); ++d) {
    const double u = (static_cast<double>(d) - static_cast<double>(pad)) * k.step / bandwidth;
    kernel[d] = norm * std::exp(-0.5 * u * u);
  }
  k.density.assign(kKdeGridSize, 0.0);
  for (std::size_t g = 0; g < kKdeGridSize; ++g) {
    double sum = 0.0;
    const std::size_t center = g + pad;
    for (std::size_t d = 0; d < kernel.size(); ++d) {
      sum += bins[center + d - pad] * kernel[d];
    }
    k.density[g] = sum;
  }
  return k;
}

struct ModeCount {
  std::size_t significant = 0;  ///< maxima whose prominence is significant
  std::size_t raw = 0;          ///< all strict local maxima on the grid
  double z = 0.0;               ///< per-peak threshold in units of sqrt(2) SE
  std::vector<double> locations;
};

/// Counts modes of a KDE. A strict local maximum counts as a mode when its
/// topographic prominence exceeds z sqrt(2) SE(f(peak)), SE being the
/// pointwise KDE standard error, with z set by a Bonferroni correction over
/// all raw maxima at family-wise level `family_alpha`. Isolated sample bumps
/// in a sparse tail and sampling ripples on a slope are thereby ignored.
inline ModeCount count_modes(const Kde& k, double family_alpha = 0.01) {
  const auto& f = k.density;
  const std::size_t n = f.size();
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (f[i] > f[i - 1] && f[i] > f[i + 1]) peaks.push_back(i);
  }
  ModeCount out;
  out.raw = peaks.size();
  if (peaks.empty()) return out;
  const boost::math::normal standard;
  out.z = boost::math::quantile(boost::math::complement(
      standard, family_alpha / (2.0 * static_cast<double>(peaks.size()))));
  for (std::size_t i : peaks) {
    // Lowest point on each side before reaching higher ground.
    double left_min = f[i];
    bool left_higher = false;
    for (std::size_t j = i; j-- > 0;) {
      if (f[j] > f[i]) {
        left_higher = true;
        break;
      }
      left_min = std::min(left_min, f[j]);
    }
    double right_min = f[i];
    bool right_higher = false;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (f[j] > f[i]) {
        right_higher = true;
        break;
      }
      right_min = std::min(right_min, f[j]);
    }
    double base;
    if (left_higher && right_higher) base = std::max(left_min, right_min);
    else if (left_higher) base = left_min;
    else if (right_higher) base = right_min;
    else base = std::min(left_min, right_min);
    if (f[i] - base > out.z * std::sqrt(2.0) * k.standard_error(f[i])) {
      ++out.significant;
      out.locations.push_back(k.grid[i]);
    }
  }
  return out;
}

inline std::size_t kde_mode_count(std::span<const double> values, double bandwidth) {
  return count_modes(kde(values, bandwidth)).significant;
}

inline std::size_t kde_mode_count(const SampleBatch& batch, double bandwidth) {
  return kde_mode_count(std::span<const double>(batch.values), bandwidth);
}

struct DensityTailReport {
  double bandwidth = 0.0;
  double integral = 0.0;
  double right_slope = 0.0;     ///< slope of -log f on the resolved part of [x_lo, x_hi]
  double right_x_hi = 0.0;      ///< upper end actually used
  std::size_t right_points = 0;
  double r_star = 0.0;
  std::vector<double> left_x;
  std::vector<double> left_ratio;  ///< -log f(x) / ((log x)^2 / 2)
  ModeCount modes;
};

/// Compares the KDE's tails with the asymptotes -log f(x) ~ r* x (right) and
/// -log f(x) ~ (log x)^2 / 2 (left). The right fit uses grid points in
/// [x_lo, x_hi] where the density exceeds 10 standard errors.
inline DensityTailReport density_tail_check(std::span<const double> values,
                                            const LawTables& tables, double x_lo = 3.0,
                                            double x_hi = 6.0,
                                            std::vector<double> left_points = {0.05, 0.1}) {
  DensityTailReport r;
  r.r_star = tables.r_star();
  r.bandwidth = silverman_bandwidth(values);
  const Kde k = kde(values, r.bandwidth);
  r.integral = k.integral();
  r.modes = count_modes(k);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < k.grid.size(); ++i) {
    const double x = k.grid[i];
    const double f = k.density[i];
    if (x < x_lo || x > x_hi) continue;
    if (!(f > 10.0 * k.standard_error(f))) break;
    xs.push_back(x);
    ys.push_back(-std::log(f));
  }
  r.right_points = xs.size();
  if (xs.size() < 10) {
    throw InsufficientDataError("density_tail_check: right tail not resolved on [x_lo, x_hi]");
  }
  r.right_x_hi = xs.back();
  auto [c0, c1] = boost::math::statistics::simple_ordinary_least_squares(xs, ys);
  (void)c0;
  r.right_slope = c1;
  for (double x : left_points) {
    const double f = k.at(x);
    const double l = std::log(x);
    r.left_x.push_back(x);
    r.left_ratio.push_back(f > 0.0 ? -std::log(f) / (0.5 * l * l)
                                   : std::numeric_limits<double>::infinity());
  }
  return r;
}

}  // namespace brwlaw
