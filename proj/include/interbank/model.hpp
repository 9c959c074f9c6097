#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace interbank {

/// Thrown when market parameters violate a hard modelling constraint.
class RejectedParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Piecewise-constant function of time with left-continuous lookup.
///
/// With breakpoints b_1 < ... < b_{n-1} and values v_0..v_{n-1}, the function
/// equals v_0 on (-inf, b_1], v_j on (b_j, b_{j+1}] and v_{n-1} after b_{n-1}.
class StepFunction {
 public:
  StepFunction() : values_{0.0} {}
  explicit StepFunction(double constant) : values_{constant} {}
  StepFunction(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double t) const;
  /// Exact integral over [a, b].
  double integral(double a, double b) const;
  bool is_zero() const;
  bool is_constant() const { return values_.size() == 1; }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const StepFunction&, const StepFunction&) = default;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

struct GroupParams {
  double sigma = 1.0;
  double q = 1.0;
  double eps = 1.0;
  double c = 0.0;
  double lambda = 0.0;
  double rho_k = 0.0;
  StepFunction gamma;
  std::optional<std::int64_t> n_banks;
  std::optional<double> beta;

  friend bool operator==(const GroupParams&, const GroupParams&) = default;
};

struct MarketParams {
  double rho = 0.0;
  double horizon = 1.0;
  std::vector<GroupParams> groups;

  friend bool operator==(const MarketParams&, const MarketParams&) = default;
};

enum class Mode { ClosedLoop, OpenLoop, Limiting, MeanField };

const char* to_string(Mode mode);

/// Uniform grid t_n = n*T/M on [0, T], with t_M == T exactly.
class TimeGrid {
 public:
  static constexpr std::size_t default_steps = 2000;

  TimeGrid(double horizon, std::size_t n_steps);

  double horizon() const { return horizon_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_points() const { return n_steps_ + 1; }
  double dt() const { return dt_; }
  double t(std::size_t n) const { return n == n_steps_ ? horizon_ : static_cast<double>(n) * dt_; }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.horizon_ == b.horizon_ && a.n_steps_ == b.n_steps_;
  }

 private:
  double horizon_;
  std::size_t n_steps_;
  double dt_;
};

/// Parameters that passed validation for a given solution mode.
///
/// Group proportions are resolved here: bank counts win over explicit
/// proportions when both are present.
class ValidatedMarket {
 public:
  const MarketParams& params() const { return params_; }
  Mode mode() const { return mode_; }
  std::size_t n_groups() const { return params_.groups.size(); }
  const GroupParams& group(std::size_t k) const { return params_.groups.at(k); }
  double beta(std::size_t k) const { return beta_.at(k); }
  const std::vector<double>& betas() const { return beta_; }
  double horizon() const { return params_.horizon; }
  double rho() const { return params_.rho; }

  bool has_bank_counts() const { return has_counts_; }
  /// Requires bank counts.
  std::int64_t n_banks(std::size_t k) const;
  std::int64_t n_total() const;
  /// 1/N~_k = (1-lambda_k)/N_k + lambda_k/N; requires bank counts.
  double inv_effective_size(std::size_t k) const;

  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Lower bound on c_k under which the mean-field system is known to be
  /// well posed; NaN when some lambda is zero.
  double terminal_weight_threshold() const;

 private:
  friend ValidatedMarket validate(const MarketParams&, Mode);
  ValidatedMarket() = default;

  MarketParams params_;
  Mode mode_ = Mode::ClosedLoop;
  std::vector<double> beta_;
  bool has_counts_ = false;
  std::vector<std::string> warnings_;
};

/// Throws RejectedParams on constraint violations; soft issues become warnings.
ValidatedMarket validate(const MarketParams& params, Mode mode);

/// Same parameters with a different bank count per group (bank counts set for all groups).
MarketParams with_bank_counts(const MarketParams& params, const std::vector<std::int64_t>& counts);

}  // namespace interbank
