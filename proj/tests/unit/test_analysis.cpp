#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "interbank/analysis.hpp"

using namespace interbank;

namespace {

CoefficientPath limiting_path(const MarketParams& p) {
  return integrate_backward(limiting_system(validate(p, Mode::Limiting)), TimeGrid(p.horizon, 2000));
}

MarketParams fig3_market() {
  auto p = fixtures::figure_market();
  p.groups[0].lambda = 0.5;
  p.groups[1].lambda = 0.1;
  return p;
}

}  // namespace

TEST(SumIdentity, HoldsOnLimitingPath) {
  const auto r = check_sum_identity(limiting_path(fixtures::figure_market_limit()));
  EXPECT_LT(r.max_eta_sum, 1e-12);
  EXPECT_LT(r.max_phi_sum, 1e-12);
}

TEST(SumIdentity, NeedsLimitingLabels) {
  const auto m = validate(fixtures::figure_market(), Mode::ClosedLoop);
  const auto path = integrate_backward(closed_loop_system(m), TimeGrid(1.0, 100));
  EXPECT_THROW(check_sum_identity(path), LabelMismatch);
}

TEST(Bounds, HoldOnFigureMarket) {
  const auto p = fixtures::figure_market_limit();
  const auto r = check_prop1_bounds(limiting_path(p), validate(p, Mode::Limiting));
  EXPECT_GE(r.min_slack, -1e-8);
  EXPECT_FALSE(r.component.empty());
}

TEST(Bounds, ZeroPathIsExactlyOnLowerBound) {
  auto p = fixtures::figure_market_limit();
  p.groups[0].eps = 4.0;
  p.groups[1].eps = 4.0;
  const auto path = limiting_path(p);
  for (double v : path.raw()) EXPECT_EQ(v, 0.0);
  const auto r = check_prop1_bounds(path, validate(p, Mode::Limiting));
  EXPECT_EQ(r.min_slack, 0.0);
  EXPECT_EQ(check_sum_identity(path).max_eta_sum, 0.0);
}

TEST(RowSums, VanishForMeanField) {
  const auto m = validate(fixtures::three_group_market(), Mode::MeanField);
  const auto path = integrate_backward(mfg_system(m), TimeGrid(2.0, 2000));
  EXPECT_LT(check_mfg_row_sums(path, 3), 1e-12);
}

TEST(Convergence, GapsShrinkWithPopulation) {
  const auto r = convergence_to_mfg(fixtures::figure_market(), {20, 200, 2000}, 500);
  ASSERT_EQ(r.closed_gaps.size(), 3u);
  EXPECT_GT(r.closed_gaps[0], r.closed_gaps[1]);
  EXPECT_GT(r.closed_gaps[1], r.closed_gaps[2]);
  EXPECT_GT(r.open_gaps[0], r.open_gaps[1]);
  EXPECT_GT(r.open_gaps[1], r.open_gaps[2]);
  EXPECT_TRUE(std::isfinite(r.closed_slope));
  EXPECT_TRUE(std::isfinite(r.open_slope));
}

TEST(StrategyGap, ZeroForIdenticalStrategies) {
  const auto m = validate(fixtures::figure_market(), Mode::ClosedLoop);
  const auto path = integrate_backward(closed_loop_system(m), TimeGrid(1.0, 100));
  const auto s = feedback_closed(path, m);
  EXPECT_EQ(strategy_gap(s, s), 0.0);
}

TEST(Sweep, AxisNames) {
  for (auto axis : {SweepAxis::Lambda2, SweepAxis::Horizon, SweepAxis::NTotal}) {
    EXPECT_EQ(parse_sweep_axis(to_string(axis)), axis);
  }
  EXPECT_THROW(parse_sweep_axis("sigma"), std::invalid_argument);
}

TEST(Sweep, LambdaMatchesOracle) {
  const auto& o = fixtures::oracle()["fig1_rate0_by_lambda2"];
  const auto r = sweep_liquidity(fixtures::figure_market(), SweepAxis::Lambda2, {0.1, 0.3, 0.5, 0.7, 0.9}, 2000, 3);
  const char* keys[] = {"0.1", "0.3", "0.5", "0.7", "0.9"};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.rate0[i], o[keys[i]].get<double>(), 1e-9) << keys[i];
}

TEST(Sweep, PopulationMatchesOracle) {
  for (int horizon : {1, 10}) {
    auto p = fig3_market();
    p.horizon = horizon;
    const auto& o = fixtures::oracle()["fig3_rate0_by_N_T" + std::to_string(horizon)];
    const auto r = sweep_liquidity(p, SweepAxis::NTotal, {10, 50, 100, 500}, 2000, 2);
    const char* keys[] = {"10", "50", "100", "500"};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.rate0[i], o[keys[i]].get<double>(), 1e-9) << keys[i];
    EXPECT_EQ(r.curves.size(), 4u);
  }
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  const auto a = sweep_liquidity(fixtures::figure_market(), SweepAxis::Horizon, {1.0, 2.0, 3.0}, 300, 1);
  const auto b = sweep_liquidity(fixtures::figure_market(), SweepAxis::Horizon, {1.0, 2.0, 3.0}, 300, 4);
  EXPECT_EQ(a.rate0, b.rate0);
}

TEST(Sweep, RejectsUnorderedValues) {
  EXPECT_THROW(sweep_liquidity(fixtures::figure_market(), SweepAxis::Lambda2, {0.3, 0.5, 0.4}), std::invalid_argument);
}

TEST(NormalCdf, ReferenceValues) {
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.96), 0.97500210485177956586, 1e-15);
  EXPECT_NEAR(normal_cdf(0.5), 0.69146246127401310364, 1e-15);
  EXPECT_NEAR(normal_cdf(-3.0) / 0.0013498980316300945267, 1.0, 1e-14);
  EXPECT_NEAR(normal_cdf(-8.0) / 6.2209605742717841235e-16, 1.0, 1e-13);
}

TEST(SystemicProbability, EdgeCases) {
  EXPECT_EQ(analytic_systemic_probability(0.0, 1.0, 10.0, 1.0), 1.0);
  EXPECT_THROW(analytic_systemic_probability(0.1, 1.0, 10.0, 1.0), DomainError);
  EXPECT_THROW(analytic_systemic_probability(-0.1, 0.0, 10.0, 1.0), DomainError);
  EXPECT_GT(analytic_systemic_probability(-1.0, 1.0, 1.0, 1e8), 1.0 - 1e-4);
  EXPECT_NEAR(analytic_systemic_probability(-1.96, 1.0, 1.0, 1.0), 0.04999579029644087, 1e-15);
  EXPECT_NEAR(analytic_systemic_probability(-0.62, 1.0, 10.0, 1.0), 2.0 * normal_cdf(-0.62 * std::sqrt(10.0)),
              1e-15);
}

TEST(SystemicProbability, DiscreteShift) {
  EXPECT_NEAR(discrete_barrier_shift(1.0, 1.0, 1.0), 0.5825971579390106, 1e-15);
  EXPECT_NEAR(discrete_barrier_shift(2.0, 4.0, 0.01), 0.5825971579390106 * 2.0 * 0.05, 1e-15);
}

TEST(Hjb, FigureMarketResidualIsSmall) {
  const auto m = validate(fixtures::figure_market(), Mode::ClosedLoop);
  const auto path = integrate_backward(closed_loop_system(m), TimeGrid(1.0, 2000));
  const auto r = hjb_residual(path, m, 50, 7);
  EXPECT_EQ(r.samples, 50u);
  EXPECT_LT(r.max_scaled_residual, 1e-4);
  EXPECT_LT(r.max_control_gap, 1e-10);
}

TEST(Hjb, GeneralMarketResidualIsSmall) {
  const auto m = validate(fixtures::general_market(), Mode::ClosedLoop);
  const auto path = integrate_backward(closed_loop_system(m), TimeGrid(1.0, 2000));
  EXPECT_LT(hjb_residual(path, m, 50, 8).max_scaled_residual, 1e-4);
}

TEST(Hjb, ZeroPathHasZeroResidual) {
  auto p = fixtures::figure_market();
  p.groups[0].eps = 4.0;
  p.groups[1].eps = 4.0;
  p.groups[0].sigma = 0.0;
  p.groups[1].sigma = 0.0;
  const auto m = validate(p, Mode::ClosedLoop);
  const auto path = integrate_backward(closed_loop_system(m), TimeGrid(1.0, 200));
  EXPECT_EQ(hjb_residual(path, m, 20, 1).max_residual, 0.0);
}

TEST(Hjb, DetectsPerturbedCoefficients) {
  const auto m = validate(fixtures::figure_market(), Mode::ClosedLoop);
  const auto path = integrate_backward(closed_loop_system(m), TimeGrid(1.0, 2000));
  auto values = path.raw();
  const std::size_t i1 = path.index_of("eta1");
  for (std::size_t n = 0; n < path.grid().n_points(); ++n) values[n * path.dimension() + i1] += 1e-2;
  const CoefficientPath bad(path.grid(), path.labels(), values);
  EXPECT_GT(hjb_residual(bad, m, 50, 7).max_scaled_residual, 1e-3);
}
