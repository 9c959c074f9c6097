#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "interbank/model.hpp"
#include "interbank/riccati.hpp"

namespace interbank {

/// Time outside [0, T] was passed to a strategy.
class OutOfHorizon : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A scalar function sampled on a time grid, linearly interpolated between nodes.
class GridFunction {
 public:
  GridFunction(TimeGrid grid, std::vector<double> values);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double at_node(std::size_t n) const { return values_[n]; }
  /// Throws OutOfHorizon when t is outside [0, T].
  double operator()(double t) const;

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

enum class StrategyKind { ClosedLoop, OpenLoop, MeanField };

/// Affine feedback, for a bank of group k with state x:
///   gap_gain_k(t) (mean_k - x) + sum_h avg_weight_{k,h}(t) mean_h + intercept_k(t).
class FeedbackStrategy {
 public:
  FeedbackStrategy(StrategyKind kind, TimeGrid grid, std::size_t n_groups);

  StrategyKind kind() const { return kind_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t n_groups() const { return n_groups_; }

  double gap_gain(std::size_t k, std::size_t node) const { return gain_[k * points() + node]; }
  double avg_weight(std::size_t k, std::size_t h, std::size_t node) const {
    return weight_[(k * n_groups_ + h) * points() + node];
  }
  double intercept(std::size_t k, std::size_t node) const { return intercept_[k * points() + node]; }

  void set(std::size_t k, std::size_t node, double gain, std::span<const double> weights, double intercept);

  /// Coefficients of group k at time t with linear interpolation; weights_out has n_groups entries.
  void coefficients(std::size_t k, double t, double& gain, std::span<double> weights_out, double& intercept) const;

 private:
  std::size_t points() const { return grid_.n_points(); }

  StrategyKind kind_;
  TimeGrid grid_;
  std::size_t n_groups_;
  std::vector<double> gain_;
  std::vector<double> weight_;
  std::vector<double> intercept_;
};

/// Closed-loop strategy from a finite closed-loop path (eta/phi labels) or a
/// limiting path (etahat/phihat labels; the latter requires zero growth rates).
FeedbackStrategy feedback_closed(const CoefficientPath& path, const ValidatedMarket& market);
FeedbackStrategy feedback_open(const CoefficientPath& path, const ValidatedMarket& market);
FeedbackStrategy feedback_mfg(const CoefficientPath& path, const ValidatedMarket& market);

/// (1 - 1/N_1) eta1 - eta4 / N_1: group-1 gain on the gap to its own average.
GridFunction liquidity_rate(const CoefficientPath& path, const ValidatedMarket& market);

/// Control of a bank in group k at time t.  Throws OutOfHorizon.
double evaluate_control(const FeedbackStrategy& strategy, double t, std::size_t group, double own_state,
                        std::span<const double> group_averages);

}  // namespace interbank
