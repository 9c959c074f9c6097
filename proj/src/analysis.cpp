#include "interbank/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "interbank/simulate.hpp"

namespace interbank {

SumIdentityReport check_sum_identity(const CoefficientPath& path) {
  const std::size_t e4 = path.index_of("etahat4"), e5 = path.index_of("etahat5");
  const std::size_t f4 = path.index_of("phihat4"), f5 = path.index_of("phihat5");
  SumIdentityReport r{0.0, 0.0};
  for (std::size_t n = 0; n < path.grid().n_points(); ++n) {
    r.max_eta_sum = std::max(r.max_eta_sum, std::abs(path.at(n, e4) + path.at(n, e5)));
    r.max_phi_sum = std::max(r.max_phi_sum, std::abs(path.at(n, f4) + path.at(n, f5)));
  }
  return r;
}

BoundsReport check_prop1_bounds(const CoefficientPath& path, const ValidatedMarket& market) {
  if (market.n_groups() != 2) throw std::invalid_argument("bounds check requires two groups");
  const auto& g1 = market.group(0);
  const auto& g2 = market.group(1);
  const double b1 = market.beta(0), b2 = market.beta(1);

  struct Bound {
    std::size_t index;
    const char* label;
    double start;  // value at the terminal time
    double rate;
    double source;
  };
  const double k1 = g1.q + g2.q * g2.lambda * b1 + g1.q * g1.lambda * b2;
  const double k2 = g2.q + g1.q * g1.lambda * b2 + g2.q * g2.lambda * b1;
  const Bound bounds[2] = {
      {path.index_of("etahat5"), "etahat5", g1.c * g1.lambda * b2, k1, (g1.eps - g1.q * g1.q) * g1.lambda * b2},
      {path.index_of("phihat4"), "phihat4", g2.c * g2.lambda * b1, k2, (g2.eps - g2.q * g2.q) * g2.lambda * b1},
  };

  BoundsReport r{std::numeric_limits<double>::infinity(), 0.0, "", true};
  const double horizon = path.grid().horizon();
  for (std::size_t n = 0; n < path.grid().n_points(); ++n) {
    const double t = path.grid().t(n);
    const double s = horizon - t;
    for (const auto& b : bounds) {
      const double v = path.at(n, b.index);
      const double upper = b.start * std::exp(-b.rate * s) + b.source / b.rate;
      if (v < r.min_slack) r = {v, t, b.label, true};
      if (upper - v < r.min_slack) r = {upper - v, t, b.label, false};
    }
  }
  return r;
}

double check_mfg_row_sums(const CoefficientPath& path, std::size_t d) {
  std::vector<std::size_t> idx(d * d);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t h = 0; h < d; ++h) idx[k * d + h] = path.index_of(mfg_psi_label(k, h));
  }
  double worst = 0.0;
  for (std::size_t n = 0; n < path.grid().n_points(); ++n) {
    for (std::size_t k = 0; k < d; ++k) {
      double sum = 0.0;
      for (std::size_t h = 0; h < d; ++h) sum += path.at(n, idx[k * d + h]);
      worst = std::max(worst, std::abs(sum));
    }
  }
  return worst;
}

double strategy_gap(const FeedbackStrategy& a, const FeedbackStrategy& b) {
  if (!(a.grid() == b.grid()) || a.n_groups() != b.n_groups()) {
    throw std::invalid_argument("strategies live on different grids or group sets");
  }
  const std::size_t d = a.n_groups();
  double gap = 0.0;
  for (std::size_t n = 0; n < a.grid().n_points(); ++n) {
    for (std::size_t k = 0; k < d; ++k) {
      gap = std::max(gap, std::abs(a.gap_gain(k, n) - b.gap_gain(k, n)));
      gap = std::max(gap, std::abs(a.intercept(k, n) - b.intercept(k, n)));
      for (std::size_t h = 0; h < d; ++h) gap = std::max(gap, std::abs(a.avg_weight(k, h, n) - b.avg_weight(k, h, n)));
    }
  }
  return gap;
}

namespace {

// Least-squares slope of log y against log x.
double log_log_slope(const std::vector<std::int64_t>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(static_cast<double>(x[i]));
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

// Proportions from explicit betas or, failing that, from bank counts.
std::vector<double> resolve_betas(const MarketParams& params) {
  const bool has_beta = std::all_of(params.groups.begin(), params.groups.end(), [](const auto& g) { return g.beta.has_value(); });
  if (has_beta) {
    std::vector<double> b;
    for (const auto& g : params.groups) b.push_back(*g.beta);
    return b;
  }
  return validate(params, Mode::ClosedLoop).betas();
}

// Two-group counts with N_1 = round(beta_1 N).
std::vector<std::int64_t> split_counts(double beta1, std::int64_t n_total) {
  const auto n1 = static_cast<std::int64_t>(std::llround(beta1 * static_cast<double>(n_total)));
  if (n1 < 1 || n1 >= n_total) throw RejectedParams("total bank count too small for the group proportions");
  return {n1, n_total - n1};
}

MarketParams with_betas(MarketParams params, const std::vector<double>& betas) {
  for (std::size_t k = 0; k < params.groups.size(); ++k) {
    params.groups[k].n_banks.reset();
    params.groups[k].beta = betas[k];
  }
  return params;
}

}  // namespace

ConvergenceReport convergence_to_mfg(const MarketParams& params, const std::vector<std::int64_t>& n_values,
                                     std::size_t n_steps) {
  if (params.groups.size() != 2) throw RejectedParams("convergence study requires two groups");
  for (std::size_t i = 1; i < n_values.size(); ++i) {
    if (n_values[i] <= n_values[i - 1]) throw std::invalid_argument("N values must be strictly increasing");
  }
  const auto betas = resolve_betas(params);
  const TimeGrid grid(params.horizon, n_steps);

  const auto mfg_market = validate(with_betas(params, betas), Mode::MeanField);
  const auto mfg = feedback_mfg(integrate_backward(mfg_system(mfg_market), grid), mfg_market);

  ConvergenceReport r;
  r.n_values = n_values;
  for (const auto n : n_values) {
    const auto counts = split_counts(betas[0], n);
    const auto finite = with_bank_counts(params, counts);
    const auto closed_market = validate(finite, Mode::ClosedLoop);
    const auto open_market = validate(finite, Mode::OpenLoop);
    const auto closed = feedback_closed(integrate_backward(closed_loop_system(closed_market), grid), closed_market);
    const auto open = feedback_open(integrate_backward(open_loop_system(open_market), grid), open_market);
    r.closed_gaps.push_back(strategy_gap(closed, mfg));
    r.open_gaps.push_back(strategy_gap(open, mfg));
  }
  r.closed_slope = log_log_slope(r.n_values, r.closed_gaps);
  r.open_slope = log_log_slope(r.n_values, r.open_gaps);
  return r;
}

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Lambda2: return "lambda2";
    case SweepAxis::Horizon: return "horizon";
    case SweepAxis::NTotal: return "n_total";
  }
  return "?";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "lambda2") return SweepAxis::Lambda2;
  if (name == "horizon") return SweepAxis::Horizon;
  if (name == "n_total") return SweepAxis::NTotal;
  throw std::invalid_argument("unknown sweep axis '" + name + "' (expected lambda2, horizon or n_total)");
}

SweepResult sweep_liquidity(const MarketParams& params, SweepAxis axis, const std::vector<double>& values,
                            std::size_t n_steps, std::size_t threads) {
  if (params.groups.size() != 2) throw RejectedParams("liquidity sweep requires two groups");
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  const bool up = values.size() < 2 || values[1] > values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (up ? values[i] <= values[i - 1] : values[i] >= values[i - 1]) {
      throw std::invalid_argument("sweep values must be strictly monotone");
    }
  }

  std::vector<MarketParams> cases(values.size(), params);
  const std::vector<double> betas = axis == SweepAxis::NTotal ? resolve_betas(params) : std::vector<double>{};
  for (std::size_t i = 0; i < values.size(); ++i) {
    switch (axis) {
      case SweepAxis::Lambda2: cases[i].groups[1].lambda = values[i]; break;
      case SweepAxis::Horizon: cases[i].horizon = values[i]; break;
      case SweepAxis::NTotal: {
        const double n = values[i];
        if (n != std::floor(n) || n < 2) throw std::invalid_argument("total bank count must be an integer >= 2");
        cases[i] = with_bank_counts(params, split_counts(betas[0], static_cast<std::int64_t>(n)));
        break;
      }
    }
  }
  // Validate everything up front so failures surface in axis order.
  std::vector<ValidatedMarket> markets;
  for (const auto& c : cases) markets.push_back(validate(c, Mode::ClosedLoop));

  std::vector<std::optional<GridFunction>> curves(values.size());
  parallel_for(values.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const TimeGrid grid(markets[i].horizon(), n_steps);
      curves[i] = liquidity_rate(integrate_backward(closed_loop_system(markets[i]), grid), markets[i]);
    }
  });

  SweepResult r{axis, values, {}, {}};
  for (auto& c : curves) {
    r.rate0.push_back(c->at_node(0));
    r.curves.push_back(std::move(*c));
  }
  return r;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double analytic_systemic_probability(double level, double sigma, double n_banks, double horizon) {
  if (!(level <= 0.0)) throw DomainError("default level must be non-positive");
  if (!(sigma > 0.0) || !(horizon > 0.0) || !(n_banks >= 1.0)) {
    throw DomainError("requires sigma > 0, horizon > 0 and at least one bank");
  }
  return 2.0 * normal_cdf(level * std::sqrt(n_banks) / (sigma * std::sqrt(horizon)));
}

double discrete_barrier_shift(double sigma, double n_banks, double dt) {
  constexpr double zeta_half = 0.5825971579390106;  // -zeta(1/2) / sqrt(2 pi)
  return zeta_half * sigma * std::sqrt(dt / n_banks);
}

}  // namespace interbank
