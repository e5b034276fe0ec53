#include <gtest/gtest.h>

#include <cmath>

#include "brwlaw/verification.hpp"

namespace brwlaw {
namespace {

TEST(VerifyConfig, ScalesSampleSizesWithFloor) {
  VerifyConfig c;
  EXPECT_EQ(c.scaled(100'000), 100'000u);
  c.samples = 20'000;
  EXPECT_EQ(c.scaled(100'000), 2'000u);
  EXPECT_EQ(c.scaled(10'000), 1'000u);
}

TEST(VerifyConfig, SlowCriterionNeedsSlowSuite) {
  VerifyConfig c;
  EXPECT_FALSE(c.selected(kSlowCriterion));
  EXPECT_TRUE(c.selected(9));
  c.slow_suite = true;
  c.only = {10};
  EXPECT_TRUE(c.selected(10));
  EXPECT_FALSE(c.selected(9));
}

TEST(VerifyConfig, CriteriaUseDistinctSeeds) {
  VerifyConfig c;
  EXPECT_NE(c.params_for(8).seed, c.params_for(9).seed);
  EXPECT_EQ(c.params_for(8).seed, c.params_for(8).seed);
}

TEST(Verification, RejectsUnsupportedConfigs) {
  VerifyConfig c;
  c.params.alpha = 2.0;
  EXPECT_THROW(VerificationSuite{c}, DomainError);
  c.params.alpha = 1.0;
  c.only = {16};
  EXPECT_THROW(VerificationSuite{c}, DomainError);
}

TEST(Verification, ChernoffRatioBoundsTheLeftTail) {
  const auto moments = build_moment_table(1.0, 40);
  const auto& tables = default_law_tables();
  const double at_002 = left_tail_chernoff_ratio(0.02, moments, tables);
  EXPECT_NEAR(at_002, 1.791, 2e-3);
  // Looser for larger x, as the ratio decreases towards 1 only as x -> 0.
  EXPECT_GT(left_tail_chernoff_ratio(0.1, moments, tables), at_002);
}

TEST(Verification, AnalyticCriteriaPass) {
  VerifyConfig c;
  c.only = {1, 2, 3, 4, 5, 6};
  VerificationSuite suite(c);
  const auto report = suite.run();
  EXPECT_TRUE(report.all_pass());
  for (const auto& check : report.checks) EXPECT_TRUE(check.pass) << check.name;
}

TEST(Verification, ReportJsonShape) {
  VerifyConfig c;
  c.only = {4};
  VerificationSuite suite(c);
  const auto j = report_to_json(suite.run(), {{"command", "verify"}});
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(j["criteria"].size(), static_cast<std::size_t>(kCriterionCount));
  EXPECT_EQ(j["criteria"][0]["status"], "skipped");
  EXPECT_EQ(j["criteria"][3]["status"], "pass");
  ASSERT_FALSE(j["checks"].empty());
  for (const char* key : {"name", "criterion", "target", "estimate", "se", "tolerance", "pass"}) {
    EXPECT_TRUE(j["checks"][0].contains(key)) << key;
  }
  EXPECT_TRUE(j["all_pass"].get<bool>());
}

TEST(Verification, ErrorsBecomeFailedChecks) {
  // Too few samples above 3 for a tail fit: reported, not thrown.
  VerifyConfig c;
  c.samples = 1000;
  c.only = {9};
  VerificationSuite suite(c);
  const auto report = suite.run();
  EXPECT_FALSE(report.all_pass());
  ASSERT_EQ(report.checks.size(), 1u);
  EXPECT_NE(report.checks[0].detail.find("error:"), std::string::npos);
}

}  // namespace
}  // namespace brwlaw
