#include "interbank/equilibrium.hpp"

#include <cmath>
#include <string>

namespace interbank {

namespace {

void check_horizon(const TimeGrid& grid, double t) {
  if (!(t >= 0.0 && t <= grid.horizon())) {
    throw OutOfHorizon("time " + std::to_string(t) + " outside [0, " + std::to_string(grid.horizon()) + "]");
  }
}

// Node index and weight of the right neighbour for linear interpolation.
std::pair<std::size_t, double> locate(const TimeGrid& grid, double t) {
  const double u = t / grid.dt();
  auto n = static_cast<std::size_t>(u);
  if (n >= grid.n_steps()) return {grid.n_steps(), 0.0};
  return {n, u - static_cast<double>(n)};
}

double lerp_at(const TimeGrid& grid, double t, auto&& value_at) {
  const auto [n, w] = locate(grid, t);
  if (w == 0.0) return value_at(n);
  return (1.0 - w) * value_at(n) + w * value_at(n + 1);
}

}  // namespace

GridFunction::GridFunction(TimeGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.n_points()) throw std::invalid_argument("grid function size mismatch");
}

double GridFunction::operator()(double t) const {
  check_horizon(grid_, t);
  return lerp_at(grid_, t, [this](std::size_t n) { return values_[n]; });
}

FeedbackStrategy::FeedbackStrategy(StrategyKind kind, TimeGrid grid, std::size_t n_groups)
    : kind_(kind),
      grid_(grid),
      n_groups_(n_groups),
      gain_(n_groups * grid.n_points()),
      weight_(n_groups * n_groups * grid.n_points()),
      intercept_(n_groups * grid.n_points()) {}

void FeedbackStrategy::set(std::size_t k, std::size_t node, double gain, std::span<const double> weights,
                           double intercept) {
  gain_[k * points() + node] = gain;
  for (std::size_t h = 0; h < n_groups_; ++h) weight_[(k * n_groups_ + h) * points() + node] = weights[h];
  intercept_[k * points() + node] = intercept;
}

void FeedbackStrategy::coefficients(std::size_t k, double t, double& gain, std::span<double> weights_out,
                                    double& intercept) const {
  check_horizon(grid_, t);
  const auto [n, w] = locate(grid_, t);
  auto mix = [n = n, w = w](const double* base) { return w == 0.0 ? base[n] : (1.0 - w) * base[n] + w * base[n + 1]; };
  gain = mix(gain_.data() + k * points());
  intercept = mix(intercept_.data() + k * points());
  for (std::size_t h = 0; h < n_groups_; ++h) weights_out[h] = mix(weight_.data() + (k * n_groups_ + h) * points());
}

FeedbackStrategy feedback_closed(const CoefficientPath& path, const ValidatedMarket& market) {
  if (market.n_groups() != 2) throw RejectedParams("closed-loop strategy requires two groups");
  const bool finite = path.has_label("eta1");
  if (!finite) {
    path.index_of("etahat1");
    for (std::size_t k = 0; k < 2; ++k) {
      if (!market.group(k).gamma.is_zero()) {
        throw std::invalid_argument("limiting closed-loop strategy needs zero growth rates");
      }
    }
  }
  const double u1 = finite ? 1.0 / static_cast<double>(market.n_banks(0)) : 0.0;
  const double u2 = finite ? 1.0 / static_cast<double>(market.n_banks(1)) : 0.0;
  const auto w1 = terminal_average_weights(market, 0);
  const auto w2 = terminal_average_weights(market, 1);
  const double q1 = market.group(0).q;
  const double q2 = market.group(1).q;

  const char* eta = finite ? "eta" : "etahat";
  const char* phi = finite ? "phi" : "phihat";
  std::size_t ie[8], ip[8];
  for (int i = 1; i <= 6; ++i) {
    ie[i - 1] = path.index_of(eta + std::to_string(i));
    ip[i - 1] = path.index_of(phi + std::to_string(i));
  }
  if (finite) {
    ie[6] = path.index_of("eta7");
    ie[7] = path.index_of("eta8");
    ip[6] = path.index_of("phi7");
    ip[7] = path.index_of("phi9");
  }

  FeedbackStrategy out(StrategyKind::ClosedLoop, path.grid(), 2);
  for (std::size_t n = 0; n < path.grid().n_points(); ++n) {
    auto e = [&](int i) { return path.at(n, ie[i - 1]); };
    auto f = [&](int i) { return path.at(n, ip[i - 1]); };
    // Own-state sensitivities of each value function, negated.
    const double gain1 = q1 - ((u1 - 1.0) * e(1) + u1 * e(4));
    const double gain2 = q2 - ((u2 - 1.0) * f(1) + u2 * f(5));
    const double w1v[2] = {q1 * w1[0] - ((u1 - 1.0) * e(4) + u1 * e(2)), q1 * w1[1] - ((u1 - 1.0) * e(5) + u1 * e(6))};
    const double w2v[2] = {q2 * w2[0] - ((u2 - 1.0) * f(4) + u2 * f(6)), q2 * w2[1] - ((u2 - 1.0) * f(5) + u2 * f(3))};
    const double c1 = finite ? -((u1 - 1.0) * path.at(n, ie[6]) + u1 * path.at(n, ie[7])) : 0.0;
    const double c2 = finite ? -((u2 - 1.0) * path.at(n, ip[6]) + u2 * path.at(n, ip[7])) : 0.0;
    out.set(0, n, gain1, w1v, c1);
    out.set(1, n, gain2, w2v, c2);
  }
  return out;
}

FeedbackStrategy feedback_open(const CoefficientPath& path, const ValidatedMarket& market) {
  if (market.n_groups() != 2) throw RejectedParams("open-loop strategy requires two groups");
  const double k[2] = {1.0 - market.inv_effective_size(0), 1.0 - market.inv_effective_size(1)};
  const char* family[2] = {"etao", "phio"};
  FeedbackStrategy out(StrategyKind::OpenLoop, path.grid(), 2);
  for (std::size_t g = 0; g < 2; ++g) {
    std::size_t idx[4];
    for (int i = 0; i < 4; ++i) idx[i] = path.index_of(family[g] + std::to_string(i + 1));
    const double q = market.group(g).q;
    const auto w = terminal_average_weights(market, g);
    for (std::size_t n = 0; n < path.grid().n_points(); ++n) {
      const double weights[2] = {q * w[0] + k[g] * path.at(n, idx[1]), q * w[1] + k[g] * path.at(n, idx[2])};
      out.set(g, n, q + k[g] * path.at(n, idx[0]), weights, k[g] * path.at(n, idx[3]));
    }
  }
  return out;
}

FeedbackStrategy feedback_mfg(const CoefficientPath& path, const ValidatedMarket& market) {
  const std::size_t d = market.n_groups();
  FeedbackStrategy out(StrategyKind::MeanField, path.grid(), d);
  std::vector<double> weights(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double q = market.group(k).q;
    const auto shift = terminal_average_weights(market, k);
    const std::size_t ie = path.index_of(mfg_eta_label(k));
    const std::size_t im = path.index_of(mfg_mu_label(k));
    std::vector<std::size_t> ip(d);
    for (std::size_t h = 0; h < d; ++h) ip[h] = path.index_of(mfg_psi_label(k, h));
    for (std::size_t n = 0; n < path.grid().n_points(); ++n) {
      for (std::size_t h = 0; h < d; ++h) weights[h] = path.at(n, ip[h]) + q * shift[h];
      out.set(k, n, q + path.at(n, ie), weights, path.at(n, im));
    }
  }
  return out;
}

GridFunction liquidity_rate(const CoefficientPath& path, const ValidatedMarket& market) {
  const std::size_t i1 = path.index_of("eta1");
  const std::size_t i4 = path.index_of("eta4");
  const double u1 = 1.0 / static_cast<double>(market.n_banks(0));
  std::vector<double> rate(path.grid().n_points());
  for (std::size_t n = 0; n < rate.size(); ++n) rate[n] = (1.0 - u1) * path.at(n, i1) - u1 * path.at(n, i4);
  return GridFunction(path.grid(), std::move(rate));
}

double evaluate_control(const FeedbackStrategy& strategy, double t, std::size_t group, double own_state,
                        std::span<const double> group_averages) {
  const std::size_t d = strategy.n_groups();
  if (group >= d || group_averages.size() != d) throw std::invalid_argument("group index or averages size mismatch");
  double gain = 0.0, intercept = 0.0;
  double stack[8];
  std::vector<double> heap;
  std::span<double> weights;
  if (d <= 8) {
    weights = std::span<double>(stack, d);
  } else {
    heap.resize(d);
    weights = heap;
  }
  strategy.coefficients(group, t, gain, weights, intercept);
  double control = gain * (group_averages[group] - own_state) + intercept;
  for (std::size_t h = 0; h < d; ++h) control += weights[h] * group_averages[h];
  return control;
}

}  // namespace interbank
