#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "brwlaw/numerics.hpp"

namespace brwlaw {
namespace {

TEST(IntegrateAdaptive, ConstantIntegrand) {
  EXPECT_NEAR(integrate_adaptive([](double) { return 1.0; }, 0.0, 1.0), 1.0, 1e-14);
}

TEST(IntegrateAdaptive, InverseSquareRootEndpointSingularity) {
  QuadratureSpec spec;
  spec.abs_tol = 1e-12;
  spec.rel_tol = 1e-12;
  const double value = integrate_adaptive([](double u) { return 1.0 / std::sqrt(u); }, 0.0, 1.0, spec);
  EXPECT_NEAR(value, 2.0, 1e-11);
}

TEST(IntegrateAdaptive, InfiniteUpperLimit) {
  const double value = integrate_adaptive([](double u) { return std::exp(-u); }, 0.0,
                                          std::numeric_limits<double>::infinity());
  EXPECT_NEAR(value, 1.0, 1e-12);
}

TEST(IntegrateAdaptive, ReversedLimitsFlipSign) {
  EXPECT_NEAR(integrate_adaptive([](double u) { return u; }, 1.0, 0.0), -0.5, 1e-14);
}

TEST(IntegrateAdaptive, ErrorContractHolds) {
  QuadratureSpec spec;
  spec.abs_tol = 1e-9;
  spec.rel_tol = 1e-9;
  auto r = integrate_adaptive_detailed([](double u) { return std::cos(30.0 * u) * std::exp(u); },
                                       0.0, 2.0, spec);
  const double exact = (std::exp(2.0) * (std::cos(60.0) + 30.0 * std::sin(60.0)) - 1.0) / 901.0;
  EXPECT_LE(std::abs(r.value - exact), spec.abs_tol + spec.rel_tol * std::abs(r.value));
  EXPECT_LE(r.error, spec.abs_tol + spec.rel_tol * std::abs(r.value));
}

TEST(IntegrateAdaptive, NonConvergenceCarriesBestEstimate) {
  QuadratureSpec spec;
  spec.max_subdivisions = 8;
  try {
    integrate_adaptive([](double u) { return 1.0 / u; }, 0.0, 1.0, spec);
    FAIL() << "expected ToleranceError";
  } catch (const ToleranceError& e) {
    EXPECT_GT(e.estimate(), 0.0);
    EXPECT_GT(e.error_bound(), 0.0);
  }
}

TEST(IntegrateAdaptive, Deterministic) {
  auto f = [](double u) { return std::log(u) * std::sin(u); };
  EXPECT_EQ(integrate_adaptive(f, 0.0, 3.0), integrate_adaptive(f, 0.0, 3.0));
}

TEST(IntegrateAdaptive, RejectsBadSpec) {
  QuadratureSpec spec;
  spec.abs_tol = 0.0;
  EXPECT_THROW(integrate_adaptive([](double) { return 1.0; }, 0.0, 1.0, spec), DomainError);
}

TEST(FindRoot, CubicRoot) {
  const double root = find_root([](double x) { return x * x * x - 2.0; }, 0.0, 2.0);
  EXPECT_NEAR(root, std::cbrt(2.0), 1e-15);
}

TEST(FindRoot, RequiresSignChange) {
  EXPECT_THROW(find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0), BracketError);
}

}  // namespace
}  // namespace brwlaw
