#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "interbank/equilibrium.hpp"
#include "interbank/model.hpp"
#include "interbank/riccati.hpp"

namespace interbank {

/// Argument outside the domain of a closed-form expression.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct SumIdentityReport {
  double max_eta_sum;  // sup_t |etahat4 + etahat5|
  double max_phi_sum;  // sup_t |phihat4 + phihat5|
};

SumIdentityReport check_sum_identity(const CoefficientPath& limiting_path);

/// Pointwise check of 0 <= v(s) <= bound(s) for the reversed-time cross
/// coefficients etahat5(T - s) and phihat4(T - s), with the exponential bound
/// a e^{-k s} + b / k.
struct BoundsReport {
  double min_slack;
  double time;            // forward time of the worst node
  std::string component;  // label of the worst component
  bool lower;             // worst slack came from the lower bound
};

BoundsReport check_prop1_bounds(const CoefficientPath& limiting_path, const ValidatedMarket& market);

/// sup over t and k of |sum_h psim_k_h|.
double check_mfg_row_sums(const CoefficientPath& mfg_path, std::size_t n_groups);

struct ConvergenceReport {
  std::vector<std::int64_t> n_values;
  std::vector<double> closed_gaps;
  std::vector<double> open_gaps;
  double closed_slope;  // least-squares slope of log gap against log N
  double open_slope;
};

/// Sup-norm distance between the finite-population feedback coefficients and
/// the mean-field ones for each total size N, proportions held fixed.
ConvergenceReport convergence_to_mfg(const MarketParams& params, const std::vector<std::int64_t>& n_values,
                                     std::size_t n_steps = TimeGrid::default_steps);

/// Largest coefficient gap between two strategies on the same grid.
double strategy_gap(const FeedbackStrategy& a, const FeedbackStrategy& b);

enum class SweepAxis { Lambda2, Horizon, NTotal };

const char* to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepResult {
  SweepAxis axis;
  std::vector<double> values;
  std::vector<double> rate0;
  std::vector<GridFunction> curves;
};

SweepResult sweep_liquidity(const MarketParams& params, SweepAxis axis, const std::vector<double>& values,
                            std::size_t n_steps = TimeGrid::default_steps, std::size_t threads = 1);

/// Standard normal distribution function.
double normal_cdf(double x);

/// 2 Phi(D sqrt(N) / (sigma sqrt(T))).  Throws DomainError for D > 0 or invalid scales.
double analytic_systemic_probability(double level, double sigma, double n_banks, double horizon);

/// Barrier shift that maps discrete monitoring on a grid of step dt to the
/// continuous hitting problem: 0.5826 sigma sqrt(dt / N) for an N-bank average.
double discrete_barrier_shift(double sigma, double n_banks, double dt);

struct HjbReport {
  double max_residual;         // max |residual|
  double max_scaled_residual;  // max |residual| / (1 + max_j x_j^2)
  double max_control_gap;      // first-order-condition control vs strategy control
  std::size_t samples;
};

/// Evaluates the HJB equation of a representative bank of each group in the
/// full N-bank state space at random interior grid nodes and states with
/// |x_j| <= state_bound.  Time derivatives are central differences on the grid.
HjbReport hjb_residual(const CoefficientPath& closed_path, const ValidatedMarket& market, std::size_t samples,
                       std::uint64_t seed, double state_bound = 2.0);

}  // namespace interbank
