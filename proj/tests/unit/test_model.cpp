#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "interbank/model.hpp"

using namespace interbank;

namespace {

bool has_warning(const ValidatedMarket& m, const std::string& needle) {
  return std::any_of(m.warnings().begin(), m.warnings().end(),
                     [&](const std::string& w) { return w.find(needle) != std::string::npos; });
}

}  // namespace

TEST(StepFunction, LeftContinuousLookup) {
  const StepFunction f({0.5, 1.0}, {1.0, 2.0, 3.0});
  EXPECT_EQ(f(0.0), 1.0);
  EXPECT_EQ(f(0.5), 1.0);
  EXPECT_EQ(f(0.5000001), 2.0);
  EXPECT_EQ(f(1.0), 2.0);
  EXPECT_EQ(f(1.5), 3.0);
}

TEST(StepFunction, ExactIntegral) {
  const StepFunction f({0.5, 1.0}, {1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(f.integral(0.0, 2.0), 0.5 * 1.0 + 0.5 * 2.0 + 1.0 * 3.0);
  EXPECT_DOUBLE_EQ(f.integral(0.25, 0.75), 0.25 * 1.0 + 0.25 * 2.0);
  EXPECT_DOUBLE_EQ(f.integral(0.75, 0.25), -(0.25 * 1.0 + 0.25 * 2.0));
  EXPECT_DOUBLE_EQ(StepFunction(0.3).integral(0.0, 2.0), 0.6);
}

TEST(StepFunction, RejectsMalformedTables) {
  EXPECT_THROW(StepFunction({0.5}, {1.0}), RejectedParams);
  EXPECT_THROW(StepFunction({0.5, 0.5}, {1.0, 2.0, 3.0}), RejectedParams);
  EXPECT_TRUE(StepFunction().is_zero());
  EXPECT_FALSE(StepFunction({0.5}, {0.0, 1.0}).is_zero());
}

TEST(TimeGrid, EndsExactlyAtHorizon) {
  const TimeGrid g(0.7, 3000);
  EXPECT_EQ(g.t(0), 0.0);
  EXPECT_EQ(g.t(3000), 0.7);
  EXPECT_EQ(g.n_points(), 3001u);
  for (std::size_t n = 1; n <= 3000; ++n) EXPECT_LT(g.t(n - 1), g.t(n));
  EXPECT_THROW(TimeGrid(1.0, 1), RejectedParams);
  EXPECT_THROW(TimeGrid(0.0, 10), RejectedParams);
}

TEST(Validate, FigureMarketAcceptedWithoutWarnings) {
  const auto m = validate(fixtures::figure_market(), Mode::ClosedLoop);
  EXPECT_TRUE(m.warnings().empty());
  EXPECT_DOUBLE_EQ(m.beta(0), 0.2);
  EXPECT_DOUBLE_EQ(m.beta(1), 0.8);
  EXPECT_EQ(m.n_total(), 10);
}

TEST(Validate, ConvexityBoundaryWarns) {
  auto p = fixtures::figure_market();
  p.groups[0].eps = 4.0;
  const auto m = validate(p, Mode::ClosedLoop);
  EXPECT_TRUE(has_warning(m, "eps - q^2 = 0"));
}

TEST(Validate, RejectsHardViolations) {
  auto reject = [](auto mutate) {
    auto p = fixtures::figure_market();
    mutate(p);
    EXPECT_THROW(validate(p, Mode::ClosedLoop), RejectedParams);
  };
  reject([](MarketParams& p) { p.groups[0].q = 3.0, p.groups[0].eps = 4.0; });
  reject([](MarketParams& p) { p.groups[0].q = 0.0; });
  reject([](MarketParams& p) { p.groups[1].eps = -1.0; });
  reject([](MarketParams& p) { p.groups[1].c = -0.1; });
  reject([](MarketParams& p) { p.groups[0].lambda = 1.5; });
  reject([](MarketParams& p) { p.groups[0].sigma = -1.0; });
  reject([](MarketParams& p) { p.groups[0].rho_k = 1.1; });
  reject([](MarketParams& p) { p.rho = -1.01; });
  reject([](MarketParams& p) { p.horizon = 0.0; });
  reject([](MarketParams& p) { p.groups.push_back(p.groups[0]); });
  reject([](MarketParams& p) { p.groups[0].n_banks = 0; });
}

TEST(Validate, BoundaryLambdaWarns) {
  auto p = fixtures::figure_market();
  p.groups[0].lambda = 0.0;
  p.groups[1].lambda = 1.0;
  const auto m = validate(p, Mode::ClosedLoop);
  EXPECT_TRUE(has_warning(m, "lambda at boundary value 0"));
  EXPECT_TRUE(has_warning(m, "lambda at boundary value 1"));
}

TEST(Validate, ProportionsOnlyForLimitModes) {
  const auto p = fixtures::figure_market_limit();
  EXPECT_NO_THROW(validate(p, Mode::Limiting));
  EXPECT_NO_THROW(validate(p, Mode::MeanField));
  EXPECT_THROW(validate(p, Mode::ClosedLoop), RejectedParams);
  EXPECT_THROW(validate(p, Mode::OpenLoop), RejectedParams);

  auto bad = p;
  bad.groups[1].beta = 0.7;
  EXPECT_THROW(validate(bad, Mode::Limiting), RejectedParams);
}

TEST(Validate, CountsWinOverProportions) {
  auto p = fixtures::figure_market();
  p.groups[0].beta = 0.5;
  p.groups[1].beta = 0.5;
  const auto m = validate(p, Mode::MeanField);
  EXPECT_DOUBLE_EQ(m.beta(0), 0.2);
  EXPECT_DOUBLE_EQ(m.beta(1), 0.8);
}

TEST(Validate, RecomputedProportionsSumToOne) {
  for (std::int64_t n1 : {1, 3, 7, 333}) {
    for (std::int64_t n2 : {1, 2, 999}) {
      const auto m = validate(with_bank_counts(fixtures::figure_market(), {n1, n2}), Mode::ClosedLoop);
      EXPECT_NEAR(m.beta(0) + m.beta(1), 1.0, 1e-12);
      EXPECT_GT(m.beta(0), 0.0);
      EXPECT_LE(m.beta(0), 1.0);
    }
  }
}

TEST(Validate, MeanFieldAcceptsAnyGroupCount) {
  auto p = fixtures::three_group_market();
  EXPECT_NO_THROW(validate(p, Mode::MeanField));
  EXPECT_THROW(validate(p, Mode::Limiting), RejectedParams);
}

TEST(Validate, TerminalWeightConditionWarning) {
  // Threshold is max over (k, h) of q_k lambda_k / lambda_h - q_h = 2 * 0.5 / 0.1 - 2 = 8.
  const auto m = validate(fixtures::figure_market_limit(), Mode::MeanField);
  EXPECT_DOUBLE_EQ(m.terminal_weight_threshold(), 8.0);
  EXPECT_TRUE(has_warning(m, "below terminal-weight threshold"));

  auto p = fixtures::figure_market_limit();
  p.groups[0].c = 8.0;
  p.groups[1].c = 9.0;
  EXPECT_TRUE(validate(p, Mode::MeanField).warnings().empty());
}

TEST(Validate, EffectiveSize) {
  const auto m = validate(fixtures::figure_market(), Mode::OpenLoop);
  EXPECT_DOUBLE_EQ(m.inv_effective_size(0), 0.9 / 2.0 + 0.1 / 10.0);
  EXPECT_DOUBLE_EQ(m.inv_effective_size(1), 0.5 / 8.0 + 0.5 / 10.0);
}

TEST(Validate, BankCountsRequiredForQueries) {
  const auto m = validate(fixtures::figure_market_limit(), Mode::Limiting);
  EXPECT_FALSE(m.has_bank_counts());
  EXPECT_THROW(m.n_banks(0), std::logic_error);
}
