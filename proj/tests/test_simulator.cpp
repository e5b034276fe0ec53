#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "brwlaw/batch_io.hpp"
#include "brwlaw/law.hpp"
#include "brwlaw/moments.hpp"
#include "brwlaw/simulator.hpp"
#include "brwlaw/stats.hpp"

namespace brwlaw {
namespace {

ModelParams default_params(std::uint64_t seed) {
  ModelParams p;
  p.seed = seed;
  return p;
}

std::vector<Atom> offspring(double alpha, double T, std::uint64_t i) {
  ModelParams p;
  p.alpha = alpha;
  p.trunc_T = T;
  Atom root;
  root.key = root_key(99, "offspring-test", i);
  return sample_offspring(root, p);
}

TEST(GammaQ, ClosedFormsMatchBoost) {
  for (double x : {0.0, 0.3, 2.0, 11.0}) {
    EXPECT_NEAR(gamma_q(1.0, x), boost::math::gamma_q(1.0, std::max(x, 1e-300)), 1e-15);
    EXPECT_NEAR(gamma_q(2.0, x), boost::math::gamma_q(2.0, std::max(x, 1e-300)), 1e-15);
  }
  EXPECT_EQ(gamma_q(0.5, 0.0), 1.0);
}

TEST(SampleOffspring, CountIsPoissonForSeveralAlphas) {
  struct Case {
    double alpha, T;
  };
  for (Case c : {Case{0.5, 2.0}, Case{1.0, 2.0}, Case{2.0, 1.0}}) {
    const int n = 100000;
    std::vector<int> counts(n);
    for (int i = 0; i < n; ++i) counts[i] = static_cast<int>(offspring(c.alpha, c.T, i).size());
    const double mean = std::pow(c.T, c.alpha + 1.0) / std::tgamma(c.alpha + 2.0);
    const auto fit = chi_square_poisson(counts, mean);
    EXPECT_GT(fit.p_value, 0.01) << "alpha " << c.alpha;
    std::vector<double> as_double(counts.begin(), counts.end());
    EXPECT_TRUE(mean_estimate(as_double).within(mean, 3.0)) << "alpha " << c.alpha;
  }
}

TEST(SampleOffspring, DisplacementUniformOnTriangle) {
  const double T = 2.0;
  std::vector<double> s, ratio;
  for (int i = 0; s.size() < 100000; ++i) {
    for (const Atom& a : offspring(1.0, T, i)) {
      s.push_back(a.t + a.x);
      ratio.push_back(a.t / (T - a.x));
      EXPECT_NEAR(a.weight, std::exp(-(a.t + a.x)), 1e-15);
      EXPECT_LE(a.t + a.x, T);
    }
  }
  EXPECT_GT(ks_one_sample(s, [T](double v) { return (v / T) * (v / T); }).p_value, 0.01);
  // t' given x' is uniform on (0, T - x').
  EXPECT_GT(ks_one_sample(ratio, [](double v) { return std::clamp(v, 0.0, 1.0); }).p_value, 0.01);
}

TEST(SampleOffspring, SpaceMarginalForFractionalAlpha) {
  const double alpha = 0.5, T = 2.0;
  auto cdf = [&](double x) {
    const double norm = std::pow(T, alpha + 1.0) / (alpha * (alpha + 1.0));
    return (T * std::pow(x, alpha) / alpha - std::pow(x, alpha + 1.0) / (alpha + 1.0)) / norm;
  };
  std::vector<double> xs;
  for (int i = 0; xs.size() < 50000; ++i) {
    for (const Atom& a : offspring(alpha, T, i)) xs.push_back(a.x);
  }
  EXPECT_GT(ks_one_sample(xs, cdf).p_value, 0.01);
}

TEST(SimulateW, ZeroGenerationsIsOne) {
  ModelParams p = default_params(1);
  p.n_generations = 0;
  for (std::uint64_t i = 0; i < 5; ++i) EXPECT_EQ(simulate_W(p, i).value, 1.0);
}

TEST(SimulateW, Reproducible) {
  const ModelParams p = default_params(5);
  BatchOptions serial;
  serial.threads = 1;
  BatchOptions parallel;
  parallel.threads = 3;
  const auto a = run_batch(SampleKind::W, p, 300, serial);
  const auto b = run_batch(SampleKind::W, p, 300, parallel);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.residual_variance, b.residual_variance);
  // A different seed gives a different batch.
  const auto c = run_batch(SampleKind::W, default_params(6), 300, serial);
  EXPECT_NE(a.values, c.values);
}

TEST(SimulateW, IndexRangesCompose) {
  const ModelParams p = default_params(8);
  BatchOptions tail;
  tail.first_index = 100;
  const auto whole = run_batch(SampleKind::W, p, 150);
  const auto part = run_batch(SampleKind::W, p, 50, tail);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(part.values[i], whole.values[100 + i]);
}

TEST(SimulateW, MeanAndSecondMoment) {
  const auto batch = run_batch(SampleKind::W, default_params(11), 20000);
  EXPECT_TRUE(mean_estimate(batch.values).within(1.0, 3.0));
  const auto m2 = moment_estimate(batch.values, 2);
  const double corrected = m2.value + batch.residual_variance / static_cast<double>(batch.size());
  EXPECT_LE(std::abs(corrected - 4.0 / 3.0), 3.0 * m2.se);
  EXPECT_EQ(batch.pruned_mass_bound, 0.0);
  for (double v : batch.values) EXPECT_GT(v, 0.0);
}

TEST(SimulateW, EmpiricalMgfMatchesLaw) {
  const auto batch = run_batch(SampleKind::W, default_params(30), 20000);
  const auto& tables = default_law_tables();
  const double r = 0.3 * tables.r_star();
  EXPECT_TRUE(empirical_mgf(batch, r).within(mgf(r, tables), 3.0));
}

TEST(SimulateW, MomentsForOtherAlpha) {
  ModelParams p = default_params(12);
  p.alpha = 2.0;
  const auto batch = run_batch(SampleKind::W, p, 10000);
  const auto table = build_moment_table(2.0, 3);
  EXPECT_TRUE(mean_estimate(batch.values).within(1.0, 3.0));
  EXPECT_TRUE(moment_estimate(batch.values, 2).within(table.moment(2), 3.0));
}

TEST(SimulateW, DropModeDiffersByBookedMass) {
  ModelParams cond = default_params(13);
  cond.trunc_T = 8.0;
  cond.prune_eps = std::exp(-8.0);
  cond.n_generations = 2;
  ModelParams drop = cond;
  drop.mode = PruneMode::drop;
  drop.bias_budget = 0.05;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto a = simulate_W(cond, i);
    const auto b = simulate_W(drop, i);
    EXPECT_NEAR(a.value, b.value + b.pruned_mass, 1e-12);
    EXPECT_GT(b.pruned_mass, 0.0);
    EXPECT_EQ(a.atoms, b.atoms);
  }
}

TEST(SimulateW, DepthProfileIsFlatMartingale) {
  BatchOptions opt;
  opt.record_depths = true;
  const auto batch = run_batch(SampleKind::W, default_params(14), 5000, opt);
  const std::size_t width = batch.profile_width();
  ASSERT_EQ(batch.depth_profiles.size(), width * batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(batch.depth_profiles[i * width], 1.0);
    EXPECT_NEAR(batch.depth_profiles[i * width + width - 1], batch.values[i],
                1e-12 * batch.values[i]);
  }
  for (std::size_t d = 1; d < width; ++d) {
    std::vector<double> step(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      step[i] = batch.depth_profiles[i * width + d] - batch.depth_profiles[i * width + d - 1];
    }
    EXPECT_TRUE(mean_estimate(step).within(0.0, 3.0)) << "depth " << d;
  }
}

TEST(SimulateW, ScalingInvarianceOfTiltedWeights) {
  BatchOptions tilted;
  tilted.tilt = 2.0;
  const auto a = run_batch(SampleKind::W, default_params(15), 10000);
  const auto b = run_batch(SampleKind::W, default_params(15), 10000, tilted);
  EXPECT_NE(a.values, b.values);
  EXPECT_GT(ks_two_sample(a.values, b.values).p_value, 0.01);
}

TEST(SimulateW, ResourceCapIsEnforced) {
  ModelParams p = default_params(16);
  p.max_atoms = 10;
  EXPECT_THROW(simulate_W(p, 0), ResourceError);
}

TEST(SimulateW1, MeanMgfAndVoidProbability) {
  const auto batch = run_batch(SampleKind::W1, default_params(17), 100000);
  EXPECT_TRUE(mean_estimate(batch.values).within(1.0, 3.0));
  const auto lm = empirical_log_mgf(batch.values, 0.5);
  EXPECT_TRUE(lm.within(w1_log_mgf(1.0, 0.5, 30).value, 3.0));

  ModelParams small = default_params(18);
  small.trunc_T = 2.0;
  small.bias_budget = 1.0;
  const auto sparse = run_batch(SampleKind::W1, small, 100000);
  std::vector<double> empty(sparse.size());
  for (std::size_t i = 0; i < sparse.size(); ++i) empty[i] = sparse.values[i] == 0.0 ? 1.0 : 0.0;
  EXPECT_TRUE(mean_estimate(empty).within(std::exp(-2.0), 3.0));
}

TEST(SimulateW1, IsFirstGenerationOfTheTree) {
  ModelParams p = default_params(19);
  p.trunc_T = 6.0;
  p.bias_budget = 1.0;
  p.n_generations = 1;
  p.prune_eps = std::exp(-6.0);
  p.mode = PruneMode::drop;
  for (std::uint64_t i = 0; i < 20; ++i) {
    EXPECT_NEAR(simulate_W1(p, i).value, simulate_W(p, i).value, 1e-14);
  }
}

TEST(SimulateYule, ExponentialLaw) {
  const auto batch = run_batch(SampleKind::Yule, default_params(20), 20000);
  EXPECT_TRUE(mean_estimate(batch.values).within(1.0, 3.0));
  EXPECT_GT(ks_one_sample_exp(batch.values).p_value, 0.01);
}

TEST(SimulateYule, VoidProbability) {
  ModelParams p = default_params(21);
  p.trunc_T = 2.0;
  p.prune_eps = std::exp(-2.0);
  p.n_generations = 1;
  p.mode = PruneMode::drop;
  p.bias_budget = 1.0;
  const auto batch = run_batch(SampleKind::Yule, p, 50000);
  std::vector<double> empty(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) empty[i] = batch.values[i] == 0.0 ? 1.0 : 0.0;
  EXPECT_TRUE(mean_estimate(empty).within(std::exp(-2.0), 3.0));
}

TEST(SelfDecomposition, SidesAgree) {
  BatchOptions opt;
  opt.split_s = 1.0;
  const auto [lhs, rhs] = run_selfdecomp_batches(default_params(22), 20000, opt);
  EXPECT_TRUE(mean_estimate(rhs.values).within(1.0, 3.0));
  EXPECT_TRUE(mean_estimate(lhs.values).within(1.0, 3.0));
  EXPECT_GT(ks_two_sample(lhs.values, rhs.values).p_value, 0.01);
}

TEST(SelfDecomposition, RemainderMatchesClosedForm) {
  // alpha = 1: the unrevealed mass of A_s is min(s, L) e^{-L} (+ e^{-L} - e^{-s} for s > L).
  const ModelParams p = default_params(23);
  const double L = -std::log(p.prune_eps);
  EXPECT_NEAR(selfdecomp_remainder(1.0, p).mass, 1.0 * std::exp(-L), 1e-14);
  EXPECT_NEAR(selfdecomp_remainder(10.0, p).mass, L * std::exp(-L) + std::exp(-L) - std::exp(-10.0),
              1e-13);
}

TEST(SelfDecomposition, SmallSplitLeavesLittleMass) {
  BatchOptions opt;
  opt.split_s = 0.01;
  const auto [lhs, rhs] = run_selfdecomp_batches(default_params(24), 2000, opt);
  EXPECT_TRUE(mean_estimate(rhs.values).within(1.0, 3.0));
  EXPECT_THROW(simulate_selfdecomp_pair(0.0, default_params(24), 0), DomainError);
}

TEST(TimeSlice, MeanIsOne) {
  BatchOptions opt;
  opt.theta = 1.0;
  opt.t_slice = 2.0;
  const auto batch = run_batch(SampleKind::Vt, default_params(25), 5000, opt);
  EXPECT_TRUE(mean_estimate(batch.values).within(1.0, 3.0));
}

TEST(TimeSlice, SmallTimeConcentratesAtOne) {
  BatchOptions opt;
  opt.t_slice = 0.01;
  const auto batch = run_batch(SampleKind::Vt, default_params(26), 2000, opt);
  const auto sq = transformed_mean(batch.values, [](double v) { return (v - 1.0) * (v - 1.0); });
  EXPECT_LT(sq.value, 0.05);
}

TEST(TimeSlice, CorrelationWithTerminalValueGrowsInTime) {
  double previous = -1.0;
  for (double t : {1.0, 2.0, 4.0}) {
    BatchOptions opt;
    opt.t_slice = t;
    opt.couple_w = true;
    const auto batch = run_batch(SampleKind::Vt, default_params(27), 3000, opt);
    const double rho = correlation(batch.values, batch.coupled);
    EXPECT_GT(rho, previous) << t;
    previous = rho;
  }
  EXPECT_GT(previous, 0.8);
}

TEST(Validation, RejectsBadParams) {
  ModelParams p;
  p.alpha = -1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = ModelParams{};
  p.prune_eps = 2.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = ModelParams{};
  p.mode = PruneMode::drop;  // prune_eps = 1e-3 > e^{-25}
  EXPECT_THROW(p.validate(), DomainError);
  p.prune_eps = 1e-12;
  EXPECT_NO_THROW(p.validate());
}

TEST(Validation, BudgetExceededRejectsBatch) {
  // Yule walk in drop mode with T = 2: each expanded atom books e^{-2} of
  // unrevealed mass. One generation books 0.135 per sample; four generations
  // expand about 6 atoms per sample on average.
  ModelParams p = default_params(28);
  p.trunc_T = 2.0;
  p.prune_eps = std::exp(-2.0);
  p.n_generations = 1;
  p.mode = PruneMode::drop;
  p.bias_budget = 0.5;
  EXPECT_NO_THROW(run_batch(SampleKind::Yule, p, 200));
  p.n_generations = 4;
  EXPECT_THROW(run_batch(SampleKind::Yule, p, 200), BudgetExceededError);
}

TEST(BatchIo, RoundTripsAllFormats) {
  BatchOptions opt;
  opt.t_slice = 1.5;
  opt.couple_w = true;
  const auto batch = run_batch(SampleKind::Vt, default_params(29), 50, opt);
  {
    std::stringstream s;
    write_batch_csv(s, batch, "run_config={}");
    const auto back = read_batch_csv(s);
    EXPECT_EQ(back.values, batch.values);
    EXPECT_EQ(back.coupled, batch.coupled);
    EXPECT_EQ(back.kind, batch.kind);
    EXPECT_EQ(back.t_slice, batch.t_slice);
    EXPECT_EQ(back.params.seed, batch.params.seed);
  }
  {
    const auto back = batch_from_json(nlohmann::json::parse(batch_to_json(batch).dump()));
    EXPECT_EQ(back.values, batch.values);
    EXPECT_EQ(back.residual_variance, batch.residual_variance);
  }
  {
    BatchOptions depth;
    depth.record_depths = true;
    const auto w = run_batch(SampleKind::W, default_params(30), 20, depth);
    std::stringstream s(std::ios::in | std::ios::out | std::ios::binary);
    write_batch_binary(s, w);
    const auto back = read_batch_binary(s);
    EXPECT_EQ(back.values, w.values);
    EXPECT_EQ(back.depth_profiles, w.depth_profiles);
    EXPECT_EQ(back.params.n_generations, w.params.n_generations);
  }
}

}  // namespace
}  // namespace brwlaw
