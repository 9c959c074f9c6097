#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "interbank/csv.hpp"
#include "interbank/equilibrium.hpp"
#include "interbank/model.hpp"

namespace interbank {

/// A simulated state became non-finite.
class SimulationBlowUp : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Three-layer noise: one global driver, one driver per group, one per bank.
///
/// Standard normals are addressed by (seed, path, step, driver) through a
/// counter-based generator.  Driver 0 is the global noise, drivers 1..d the
/// group noises, then one driver per bank in group order.
class NoiseSpec {
 public:
  struct Loadings {
    double global;
    double group;
    double own;
  };

  NoiseSpec(const ValidatedMarket& market, std::uint64_t seed, std::size_t n_paths);

  std::uint64_t seed() const { return seed_; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_groups() const { return loadings_.size(); }
  const Loadings& loadings(std::size_t k) const { return loadings_.at(k); }

  /// Standard normal draws for drivers [0, count) at (path, step).
  void draws(std::uint64_t path, std::uint32_t step, std::size_t count, double* out) const;

 private:
  std::uint64_t seed_;
  std::size_t n_paths_;
  std::vector<Loadings> loadings_;
};

/// Step index reserved for sampling random initial states.
inline constexpr std::uint32_t initial_state_step = 0xFFFFFFFFu;

/// Per-step Brownian increments for a bank population.
class IncrementStream {
 public:
  IncrementStream(const NoiseSpec& spec, const TimeGrid& grid, std::vector<std::size_t> banks_per_group);

  std::size_t n_banks() const { return group_of_.size(); }
  std::size_t n_drivers() const { return 1 + banks_per_group_.size() + group_of_.size(); }
  std::size_t group_of(std::size_t bank) const { return group_of_[bank]; }

  /// sqrt(dt)-scaled increments of every driver at (path, step).
  void drivers(std::uint64_t path, std::size_t step, std::span<double> out) const;
  /// Unit-loading composite increment of every bank (not yet multiplied by sigma).
  void composite(std::uint64_t path, std::size_t step, std::span<double> out) const;

 private:
  const NoiseSpec& spec_;
  double sqrt_dt_;
  std::vector<std::size_t> banks_per_group_;
  std::vector<std::size_t> group_of_;
};

IncrementStream generate_increments(const NoiseSpec& spec, const TimeGrid& grid,
                                    std::vector<std::size_t> banks_per_group);

/// Initial capitalizations: constant per group, or i.i.d. normal when sd > 0.
struct InitialState {
  std::vector<double> mean;
  std::vector<double> sd;

  static InitialState constant(std::vector<double> mean);
};

struct SimulationOptions {
  std::size_t threads = 1;
  bool keep_states = true;
};

/// Per-path trajectories.  Full bank states are optional; averages are always kept.
class TrajectoryEnsemble {
 public:
  TrajectoryEnsemble(TimeGrid grid, std::size_t n_paths, std::vector<std::size_t> banks_per_group, bool keep_states);

  const TimeGrid& grid() const { return grid_; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_groups() const { return banks_per_group_.size(); }
  std::size_t n_banks() const { return group_of_.size(); }
  std::size_t n_points() const { return grid_.n_points(); }
  const std::vector<std::size_t>& banks_per_group() const { return banks_per_group_; }
  std::size_t group_of(std::size_t bank) const { return group_of_[bank]; }
  bool has_states() const { return !states_.empty(); }

  double state(std::size_t path, std::size_t bank, std::size_t node) const {
    return states_[(path * n_banks() + bank) * n_points() + node];
  }
  double group_average(std::size_t path, std::size_t k, std::size_t node) const {
    return group_avg_[(path * n_groups() + k) * n_points() + node];
  }
  double global_average(std::size_t path, std::size_t node) const { return global_avg_[path * n_points() + node]; }

  double* state_row(std::size_t path, std::size_t bank) { return states_.data() + (path * n_banks() + bank) * n_points(); }
  double* group_average_row(std::size_t path, std::size_t k) {
    return group_avg_.data() + (path * n_groups() + k) * n_points();
  }
  double* global_average_row(std::size_t path) { return global_avg_.data() + path * n_points(); }

  const std::vector<double>& raw_states() const { return states_; }

 private:
  TimeGrid grid_;
  std::size_t n_paths_;
  std::vector<std::size_t> banks_per_group_;
  std::vector<std::size_t> group_of_;
  std::vector<double> states_;
  std::vector<double> group_avg_;
  std::vector<double> global_avg_;
};

/// Euler-Maruyama under an affine feedback strategy for the banks of `market`.
TrajectoryEnsemble simulate_closed_loop(const ValidatedMarket& market, const FeedbackStrategy& strategy,
                                        const InitialState& x0, const NoiseSpec& spec, const TimeGrid& grid,
                                        const SimulationOptions& options = {});

/// Per-path conditional group means of the mean-field limit, driven by the
/// global and group drivers of the same noise layout.
class MeanEnsemble {
 public:
  MeanEnsemble(TimeGrid grid, std::size_t n_paths, std::size_t n_groups);
  const TimeGrid& grid() const { return grid_; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_groups() const { return n_groups_; }
  double mean(std::size_t path, std::size_t k, std::size_t node) const {
    return values_[(path * n_groups_ + k) * grid_.n_points() + node];
  }
  double* row(std::size_t path, std::size_t k) { return values_.data() + (path * n_groups_ + k) * grid_.n_points(); }

 private:
  TimeGrid grid_;
  std::size_t n_paths_;
  std::size_t n_groups_;
  std::vector<double> values_;
};

MeanEnsemble simulate_mfg_mean(const ValidatedMarket& market, const FeedbackStrategy& mfg_strategy,
                               std::span<const double> m0, const NoiseSpec& spec, const TimeGrid& grid,
                               const SimulationOptions& options = {});

/// x̄1 - x̄2 per node for one path of a two-group ensemble.
std::vector<double> distance_process(const TrajectoryEnsemble& ensemble, std::size_t path);

struct DefaultSpec {
  enum class Target { GlobalAverage, GroupAverage, SingleBank };
  double level = 0.0;
  Target target = Target::GlobalAverage;
  std::size_t group = 0;
  std::size_t bank = 0;  // index within the group
};

struct HittingEstimate {
  double probability;
  double std_error;
  std::size_t hits;
  std::size_t n_paths;
};

/// Fraction of paths whose target reaches the level at some grid node.
/// Paths are streamed; nothing beyond the current state is stored.
HittingEstimate mc_hitting_probability(const ValidatedMarket& market, const FeedbackStrategy& strategy,
                                       const InitialState& x0, const NoiseSpec& spec, const TimeGrid& grid,
                                       const DefaultSpec& barrier, const SimulationOptions& options = {});

/// Quantile fan of group averages: t, then per group mean and the given quantiles.
CsvTable group_average_fan(const TrajectoryEnsemble& ensemble, std::span<const double> quantiles);
/// Mean and standard deviation of the distance process per node.
CsvTable distance_summary(const TrajectoryEnsemble& ensemble);
/// Sample mean of the conditional means per node.
CsvTable mfg_mean_summary(const MeanEnsemble& ensemble);

/// Flat little-endian float64 dump of all bank states after a one-line text header.
void dump_raw_states(const TrajectoryEnsemble& ensemble, const std::filesystem::path& target);

/// Runs body(begin, end) over a static contiguous partition of [0, n).
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace interbank
