#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "brwlaw/moments.hpp"
#include "oracles.hpp"

namespace brwlaw {
namespace {

TEST(MomentTable, LowOrderValuesForAlphaOne) {
  const auto table = build_moment_table(1.0, 5);
  EXPECT_EQ(table.moment(1), 1.0);
  EXPECT_NEAR(table.moment(2), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(table.moment(3), 9.0 / 4.0, 1e-14);
  EXPECT_NEAR(table.coefficient(1), 1.0, 1e-15);
  EXPECT_NEAR(table.coefficient(2), 1.0 / 6.0, 1e-15);
  // Variance of W is the second cumulant.
  EXPECT_NEAR(table.cumulant(2), 1.0 / 3.0, 1e-15);
}

// Exact rational recursion, independent of the log-domain implementation.
TEST(MomentTable, MatchesDirectRecursion) {
  const double alpha = 1.0;
  std::vector<double> mu{1.0};
  for (int k = 2; k <= 12; ++k) {
    double sum = 0.0;
    for (int m = 1; m < k; ++m) {
      double binom = 1.0;
      for (int j = 0; j < m - 1; ++j) binom = binom * (k - 1 - j) / (j + 1);
      sum += binom * mu[m - 1] * mu[k - m - 1] / std::pow(m, 1.0 + alpha);
    }
    mu.push_back(sum / (1.0 - std::pow(k, -(1.0 + alpha))));
  }
  const auto table = build_moment_table(alpha, 12);
  for (int k = 1; k <= 12; ++k) EXPECT_NEAR(table.moment(k) / mu[k - 1], 1.0, 1e-13) << k;
}

TEST(MomentTable, MomentCumulantIdentity) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto t = build_moment_table(alpha, 20);
    for (std::size_t k = 2; k <= 20; ++k) {
      double rhs = t.cumulant(k);
      for (std::size_t m = 1; m < k; ++m) {
        rhs += std::exp(detail::log_binomial(k - 1.0, m - 1.0)) * t.cumulant(m) * t.moment(k - m);
      }
      EXPECT_NEAR(rhs / t.moment(k), 1.0, 1e-12) << "alpha " << alpha << " k " << k;
    }
  }
}

TEST(MomentTable, PrefixStability) {
  const auto small = build_moment_table(1.0, 30);
  const auto large = build_moment_table(1.0, 60);
  for (std::size_t k = 1; k <= 30; ++k) {
    EXPECT_EQ(small.mu[k - 1], large.mu[k - 1]);
    EXPECT_EQ(small.c[k - 1], large.c[k - 1]);
  }
}

TEST(MomentTable, RatioTestRecoversExplosionPoint) {
  const auto t = build_moment_table(1.0, 41);
  // Coefficient ratio (mu_k / k!) / (mu_{k+1} / (k+1)!) -> r*.
  const double ratio = std::exp(t.log_mu[39] - t.log_mu[40]) * 41.0;
  EXPECT_NEAR(ratio / oracle::kRStar, 1.0, 0.05);
}

TEST(MomentTable, DecreasingInAlpha) {
  const auto a = build_moment_table(0.5, 10);
  const auto b = build_moment_table(1.0, 10);
  const auto c = build_moment_table(2.0, 10);
  for (std::size_t k = 2; k <= 10; ++k) {
    EXPECT_GT(a.moment(k), b.moment(k));
    EXPECT_GT(b.moment(k), c.moment(k));
  }
}

TEST(MomentTable, HighOrderStaysFinite) {
  const auto t = build_moment_table(1.0, 200);
  for (double v : t.log_mu) EXPECT_TRUE(std::isfinite(v));
  for (double v : t.mu) EXPECT_TRUE(std::isfinite(v));
}

TEST(MomentTable, OverflowReported) {
  EXPECT_THROW(build_moment_table(1.0, 400), OrderTooLargeError);
}

TEST(MomentTable, DomainErrors) {
  EXPECT_THROW(build_moment_table(0.0, 5), DomainError);
  EXPECT_THROW(build_moment_table(1.0, 0), DomainError);
}

TEST(MgfSeries, ConvergesInsideRadius) {
  const auto t = build_moment_table(1.0, 120);
  const auto v = mgf_series(0.5, t);
  EXPECT_LT(v.first_omitted, 1e-12);
  EXPECT_GT(v.value, 1.5);
  EXPECT_NEAR(cgf_series(0.5, t).value, std::log(v.value), 1e-10);
}

TEST(MgfSeries, OutsideRadiusThrows) {
  const auto t = build_moment_table(1.0, 60);
  EXPECT_THROW(mgf_series(3.0, t), RadiusExceededError);
}

TEST(W1LogMgf, MatchesDirectSum) {
  const double r = 0.7;
  double direct = 0.0;
  double fact = 1.0;
  for (int k = 1; k <= 30; ++k) {
    fact *= k;
    direct += std::pow(r, k) / (fact * std::pow(k, 2.0));
  }
  const auto v = w1_log_mgf(1.0, r, 30);
  EXPECT_NEAR(v.value, direct, 1e-15);
  EXPECT_LT(v.first_omitted, 1e-30);
}

TEST(MomentCsv, HeaderAndSecondRow) {
  std::ostringstream out;
  write_moment_csv(out, build_moment_table(1.0, 3));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,mu_k,c_k");
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 4), "2,1.");
  EXPECT_NEAR(std::stod(line.substr(2, line.find(',', 2) - 2)), 4.0 / 3.0, 1e-15);
}

}  // namespace
}  // namespace brwlaw
