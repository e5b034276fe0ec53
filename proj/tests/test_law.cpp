#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "brwlaw/law.hpp"
#include "oracles.hpp"

namespace brwlaw {
namespace {

const LawTables& tables() { return default_law_tables(); }

const MomentTable& moments() {
  static const MomentTable table = build_moment_table(1.0, 120);
  return table;
}

TEST(Mgf, AgreesWithMomentSeriesAtSmallR) {
  for (double r : {0.1, 0.3, 0.5}) {
    const auto series = mgf_series(r, moments());
    EXPECT_NEAR(mgf(r, tables()), series.value, 1e-9) << r;
  }
}

TEST(Mgf, AgreesWithMomentSeriesInsideHalfRadius) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> pick(0.01, 0.5 * oracle::kRStar);
  for (int i = 0; i < 40; ++i) {
    const double r = pick(gen);
    const auto series = mgf_series(r, moments());
    EXPECT_NEAR(mgf(r, tables()) / series.value, 1.0, 1e-8) << r;
  }
}

TEST(Mgf, SeparationIdentityAtE) {
  const double r = tables().r_star() * std::exp(-eval_H(1.0, tables()));
  EXPECT_NEAR(mgf(r, tables()), std::exp(1.0), 1e-12);
}

TEST(Mgf, OdeResidualSmallOnGrid) {
  for (double r = 0.1; r < 2.4; r += 0.1) {
    const auto res = ode_residual(r, 1e-5, tables());
    EXPECT_LT(res.relative(), 1e-6) << r;
  }
}

TEST(Mgf, LogConvex) {
  const double h = 0.02;
  for (double r = 0.05; r + h < 2.5; r += 0.05) {
    const double second = cgf(r + h, tables()) - 2.0 * cgf(r, tables()) + cgf(r - h, tables());
    EXPECT_GT(second, 0.0) << r;
  }
}

TEST(Mgf, DomainErrors) {
  EXPECT_THROW(mgf(0.0, tables()), DomainError);
  EXPECT_THROW(mgf(-0.1, tables()), DomainError);
  EXPECT_THROW(mgf(tables().r_star(), tables()), DomainError);
  EXPECT_THROW(mgf(3.0, tables()), DomainError);
}

TEST(Mgf, ExplosionAsymptote) {
  double previous = 0.0;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const double ratio = explosion_asymptote_check(eps, tables());
    const double gap = std::abs(ratio - 1.0);
    if (eps <= 1e-2) EXPECT_LT(gap, previous) << eps;
    previous = gap;
  }
  EXPECT_LT(std::abs(explosion_asymptote_check(1e-6, tables()) - 1.0), 1e-3);
}

TEST(Laplace, SmallArgumentMatchesSeries) {
  const double r = 1e-4;
  const double expected = -r + moments().coefficient(2) * r * r;
  EXPECT_NEAR(laplace_log(r, moments(), tables()), expected, 1e-12);
}

TEST(Laplace, MonotoneDecreasingAndPositive) {
  double previous = 1.0;
  for (double r = 0.01; r < 1e4; r *= 1.5) {
    const double v = laplace(r, moments(), tables());
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, previous) << r;
    previous = v;
  }
}

TEST(Laplace, AboveJensenBound) {
  for (double r : {0.5, 1.0, 2.0, 5.0}) {
    EXPECT_GT(laplace(r, moments(), tables()), std::exp(-r)) << r;
  }
}

TEST(Laplace, LogConvex) {
  const double h = 0.05;
  for (double r = 0.1; r < 10.0; r += 0.3) {
    const double second = laplace_log(r + h, moments(), tables()) -
                          2.0 * laplace_log(r, moments(), tables()) +
                          laplace_log(r - h, moments(), tables());
    EXPECT_GT(second, 0.0) << r;
  }
}

TEST(Laplace, NotTheHalfValue) {
  EXPECT_GT(std::abs(laplace(1.0, moments(), tables()) - 0.5), 1e-3);
}

TEST(Laplace, SatisfiesGIdentity) {
  // Along the negative branch, G(phi_L(r)) = sqrt(2) log(r / r0) with r0 the
  // point where phi_L reaches the upper limit of G.
  const double r0 = 1.0;
  const double top = laplace(r0, moments(), tables());
  for (double r : {10.0, 100.0, 1e3}) {
    const double y = laplace(r, moments(), tables());
    EXPECT_NEAR(eval_G(y, top, tables()), std::sqrt(2.0) * std::log(r / r0), 1e-7) << r;
  }
}

TEST(Laplace, LeftTailRateApproachesQuadraticLog) {
  double previous = std::numeric_limits<double>::infinity();
  for (double r : {1e2, 1e4, 1e6, 1e8}) {
    const double lr = std::log(r);
    const double ratio = -laplace_log(r, moments(), tables()) / (0.5 * lr * lr);
    EXPECT_GT(ratio, 1.0);
    EXPECT_LT(ratio, previous);
    previous = ratio;
  }
  EXPECT_LT(previous, 1.1);
}

TEST(Laplace, DomainErrors) {
  EXPECT_THROW(laplace(-1.0, moments(), tables()), DomainError);
  EXPECT_THROW(laplace(std::numeric_limits<double>::infinity(), moments(), tables()),
               DomainError);
  EXPECT_THROW(laplace(1.0, build_moment_table(2.0, 10), tables()), DomainError);
  EXPECT_EQ(laplace(0.0, moments(), tables()), 1.0);
}

TEST(Tails, Asymptotes) {
  EXPECT_EQ(right_tail_rate(tables()), tables().r_star());
  EXPECT_NEAR(left_tail_asymptote(std::exp(-3.0)), 4.5, 1e-14);
  EXPECT_THROW(left_tail_asymptote(1.5), DomainError);
}

}  // namespace
}  // namespace brwlaw
