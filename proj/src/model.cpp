#include "interbank/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace interbank {

StepFunction::StepFunction(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (values_.size() != breakpoints_.size() + 1) {
    throw RejectedParams("step function needs one more value than breakpoints");
  }
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i - 1] < breakpoints_[i])) {
      throw RejectedParams("step function breakpoints must be strictly increasing");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw RejectedParams("step function values must be finite");
  }
}

double StepFunction::operator()(double t) const {
  // First breakpoint >= t selects the piece, which makes the lookup left-continuous.
  auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
}

double StepFunction::integral(double a, double b) const {
  if (b < a) return -integral(b, a);
  double total = 0.0;
  double lo = a;
  for (std::size_t i = 0; i <= breakpoints_.size() && lo < b; ++i) {
    double hi = i < breakpoints_.size() ? std::min(b, breakpoints_[i]) : b;
    if (hi > lo) {
      total += values_[i] * (hi - lo);
      lo = hi;
    }
  }
  return total;
}

bool StepFunction::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::ClosedLoop: return "closed";
    case Mode::OpenLoop: return "open";
    case Mode::Limiting: return "limiting";
    case Mode::MeanField: return "mfg";
  }
  return "unknown";
}

TimeGrid::TimeGrid(double horizon, std::size_t n_steps) : horizon_(horizon), n_steps_(n_steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw RejectedParams("horizon must be positive");
  if (n_steps < 2) throw RejectedParams("time grid needs at least 2 steps");
  dt_ = horizon / static_cast<double>(n_steps);
}

std::int64_t ValidatedMarket::n_banks(std::size_t k) const {
  if (!has_counts_) throw std::logic_error("bank counts are not available for this market");
  return *params_.groups.at(k).n_banks;
}

std::int64_t ValidatedMarket::n_total() const {
  std::int64_t total = 0;
  for (std::size_t k = 0; k < n_groups(); ++k) total += n_banks(k);
  return total;
}

double ValidatedMarket::inv_effective_size(std::size_t k) const {
  const double lam = group(k).lambda;
  return (1.0 - lam) / static_cast<double>(n_banks(k)) + lam / static_cast<double>(n_total());
}

double ValidatedMarket::terminal_weight_threshold() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& gk : params_.groups) {
    for (const auto& gh : params_.groups) {
      if (gh.lambda == 0.0) return std::numeric_limits<double>::quiet_NaN();
      worst = std::max(worst, gk.q * gk.lambda / gh.lambda - gh.q);
    }
  }
  return worst;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw RejectedParams(what);
}

std::string group_label(std::size_t k) { return "group " + std::to_string(k + 1); }

}  // namespace

ValidatedMarket validate(const MarketParams& params, Mode mode) {
  ValidatedMarket out;
  out.params_ = params;
  out.mode_ = mode;

  const std::size_t d = params.groups.size();
  require(d >= 1, "at least one group is required");
  require(std::isfinite(params.horizon) && params.horizon > 0.0, "horizon must be positive");
  require(std::isfinite(params.rho) && std::abs(params.rho) <= 1.0, "rho must lie in [-1, 1]");
  if (mode != Mode::MeanField) {
    require(d == 2, std::string(to_string(mode)) + " mode requires exactly two groups");
  }

  bool all_counts = true;
  bool all_betas = true;
  for (std::size_t k = 0; k < d; ++k) {
    const auto& g = params.groups[k];
    const auto who = group_label(k);
    require(std::isfinite(g.sigma) && g.sigma >= 0.0, who + ": sigma must be nonnegative");
    require(std::isfinite(g.q) && g.q > 0.0, who + ": q must be positive");
    require(std::isfinite(g.eps) && g.eps > 0.0, who + ": eps must be positive");
    require(g.q * g.q <= g.eps, who + ": q^2 must not exceed eps");
    require(std::isfinite(g.c) && g.c >= 0.0, who + ": c must be nonnegative");
    require(std::isfinite(g.lambda) && g.lambda >= 0.0 && g.lambda <= 1.0, who + ": lambda must lie in [0, 1]");
    require(std::isfinite(g.rho_k) && std::abs(g.rho_k) <= 1.0, who + ": rho_k must lie in [-1, 1]");
    if (g.n_banks) {
      require(*g.n_banks >= 1, who + ": n_banks must be a positive integer");
    } else {
      all_counts = false;
    }
    if (g.beta) {
      require(std::isfinite(*g.beta) && *g.beta > 0.0 && *g.beta <= 1.0, who + ": beta must lie in (0, 1]");
    } else {
      all_betas = false;
    }
    if (g.q * g.q == g.eps) {
      out.warnings_.push_back(who + ": eps - q^2 = 0: degenerate, positivity bounds vacuous");
    }
    if (g.lambda == 0.0 || g.lambda == 1.0) {
      out.warnings_.push_back(who + ": lambda at boundary value " + (g.lambda == 0.0 ? "0" : "1"));
    }
  }

  out.beta_.assign(d, 0.0);
  if (all_counts) {
    out.has_counts_ = true;
    std::int64_t total = 0;
    for (const auto& g : params.groups) total += *g.n_banks;
    for (std::size_t k = 0; k < d; ++k) {
      out.beta_[k] = static_cast<double>(*params.groups[k].n_banks) / static_cast<double>(total);
    }
  } else {
    require(mode == Mode::MeanField || mode == Mode::Limiting,
            std::string(to_string(mode)) + " mode requires n_banks for every group");
    require(all_betas, "every group needs either n_banks (all groups) or beta");
    double sum = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      out.beta_[k] = *params.groups[k].beta;
      sum += out.beta_[k];
    }
    require(std::abs(sum - 1.0) <= 1e-12, "group proportions beta must sum to 1");
  }

  if (mode == Mode::MeanField) {
    const double threshold = out.terminal_weight_threshold();
    if (std::isnan(threshold)) {
      out.warnings_.push_back("terminal-weight condition not checkable: some lambda is 0");
    } else {
      for (std::size_t k = 0; k < d; ++k) {
        if (params.groups[k].c < threshold) {
          std::ostringstream msg;
          msg << group_label(k) << ": c = " << params.groups[k].c << " below terminal-weight threshold "
              << threshold;
          out.warnings_.push_back(msg.str());
        }
      }
    }
  }
  return out;
}

MarketParams with_bank_counts(const MarketParams& params, const std::vector<std::int64_t>& counts) {
  if (counts.size() != params.groups.size()) throw RejectedParams("one bank count per group is required");
  MarketParams out = params;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out.groups[k].n_banks = counts[k];
    out.groups[k].beta.reset();
  }
  return out;
}

}  // namespace interbank
