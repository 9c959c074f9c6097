#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "interbank/model.hpp"

namespace interbank::cli {

/// Malformed or incomplete configuration text.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_failed_check = 1;
inline constexpr int exit_rejected = 2;
inline constexpr int exit_blow_up = 3;

struct SimSettings {
  std::size_t paths = 1000;
  std::string strategy = "auto";  // auto, closed, open, limiting, mfg
  std::vector<double> quantiles{0.05, 0.5, 0.95};
  bool raw = false;

  friend bool operator==(const SimSettings&, const SimSettings&) = default;
};

struct SweepSettings {
  std::string axis;
  std::vector<double> values;
  std::string expect = "none";  // none, increasing, decreasing

  friend bool operator==(const SweepSettings&, const SweepSettings&) = default;
};

struct CheckSettings {
  std::string name = "all";  // all, identity, bounds, row_sums, convergence, hjb
  std::vector<std::int64_t> n_values{100, 1000, 10000};
  std::size_t samples = 100;

  friend bool operator==(const CheckSettings&, const CheckSettings&) = default;
};

struct ProbSettings {
  double level = 0.0;
  std::string target = "global";  // global, group, bank
  std::size_t group = 1;          // 1-based
  std::size_t bank = 1;           // 1-based within the group

  friend bool operator==(const ProbSettings&, const ProbSettings&) = default;
};

struct RunConfig {
  MarketParams market;
  std::vector<double> x0_mean;  // per group
  std::vector<double> x0_sd;    // per group
  std::size_t steps = TimeGrid::default_steps;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output_dir = "out";
  std::vector<std::string> systems;  // solve targets; empty means every applicable one
  SimSettings sim;
  SweepSettings sweep;
  CheckSettings check;
  ProbSettings prob;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& file);
/// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);

struct Overrides {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> paths;
  std::optional<std::size_t> threads;
  bool raw = false;
};

void apply_overrides(RunConfig& config, const Overrides& overrides);

/// Runs a subcommand and maps failures to exit codes: 2 for rejected
/// parameters or configuration, 3 for coefficient blow-up, 1 for failed checks.
int run_command(const std::string& command, const RunConfig& config, bool quiet, std::ostream& out,
                std::ostream& err);

const char* version();

}  // namespace interbank::cli
