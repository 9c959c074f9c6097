#include <cmath>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "interbank/analysis.hpp"
#include "interbank/cli.hpp"
#include "interbank/csv.hpp"
#include "interbank/simulate.hpp"
#include "json.hpp"

#ifndef INTERBANK_VERSION
#define INTERBANK_VERSION "unknown"
#endif

namespace interbank::cli {

const char* version() { return INTERBANK_VERSION; }

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Collects artifacts in memory; nothing touches the output directory until
// the command has finished without error.
class Run {
 public:
  Run(const std::string& command, const RunConfig& config, bool quiet, std::ostream& out, std::ostream& err)
      : command_(command), config_(config), quiet_(quiet), out_(out), err_(err) {}

  const RunConfig& config() const { return config_; }
  TimeGrid grid() const { return TimeGrid(config_.market.horizon, config_.steps); }
  TimeGrid grid(double horizon) const { return TimeGrid(horizon, config_.steps); }

  ValidatedMarket market(Mode mode, const MarketParams& params) {
    auto m = validate(params, mode);
    if (!quiet_) {
      for (const auto& w : m.warnings()) err_ << "warning (" << to_string(mode) << "): " << w << '\n';
    }
    return m;
  }
  ValidatedMarket market(Mode mode) { return market(mode, config_.market); }

  void file(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
  void file(const std::string& name, const CsvTable& table) { file(name, table.str()); }
  void deferred(const std::string& name, std::function<void(const fs::path&)> writer) {
    deferred_.emplace_back(name, std::move(writer));
  }

  void verdict(bool pass, const std::string& name, const std::string& detail, double measured, double tolerance) {
    all_pass_ = all_pass_ && pass;
    out_ << (pass ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    checks_.push_back({{"name", name}, {"pass", pass}, {"measured", measured}, {"tolerance", tolerance}});
  }
  void info(const std::string& line) {
    if (!quiet_) out_ << line << '\n';
  }
  void result(const std::string& line) { out_ << line << '\n'; }

  int finish() {
    const fs::path dir(config_.output_dir);
    json outputs = json::array();
    for (const auto& [name, content] : files_) {
      write_file_atomic(dir / name, content);
      outputs.push_back(name);
    }
    for (const auto& [name, writer] : deferred_) {
      writer(dir / name);
      outputs.push_back(name);
    }
    json manifest{{"version", version()},
                  {"command", command_},
                  {"seed", config_.seed},
                  {"threads", config_.threads},
                  {"solver", {{"method", "rk4-backward"}, {"steps", config_.steps}, {"blow_up_threshold", blow_up_threshold}}},
                  {"parameters", parameters_json()},
                  {"config", render_config(config_)},
                  {"outputs", outputs},
                  {"checks", checks_},
                  {"all_pass", all_pass_}};
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    return all_pass_ ? exit_ok : exit_failed_check;
  }

 private:
  json parameters_json() const {
    json groups = json::array();
    for (const auto& g : config_.market.groups) {
      json j{{"sigma", g.sigma}, {"q", g.q},         {"eps", g.eps},
             {"c", g.c},         {"lambda", g.lambda}, {"rho_k", g.rho_k},
             {"gamma", {{"breakpoints", g.gamma.breakpoints()}, {"values", g.gamma.values()}}}};
      j["n_banks"] = g.n_banks ? json(*g.n_banks) : json(nullptr);
      j["beta"] = g.beta ? json(*g.beta) : json(nullptr);
      groups.push_back(j);
    }
    json p{{"horizon", config_.market.horizon}, {"rho", config_.market.rho}, {"groups", groups}};
    try {
      const auto m = validate(config_.market, has_counts() ? Mode::MeanField : Mode::Limiting);
      p["beta_resolved"] = m.betas();
    } catch (const std::exception&) {
    }
    return p;
  }
  bool has_counts() const {
    for (const auto& g : config_.market.groups) {
      if (!g.n_banks) return false;
    }
    return true;
  }

  std::string command_;
  const RunConfig& config_;
  bool quiet_;
  std::ostream& out_;
  std::ostream& err_;
  std::vector<std::pair<std::string, std::string>> files_;
  std::vector<std::pair<std::string, std::function<void(const fs::path&)>>> deferred_;
  json checks_ = json::array();
  bool all_pass_ = true;
};

bool all_counts(const MarketParams& p) {
  for (const auto& g : p.groups) {
    if (!g.n_banks) return false;
  }
  return true;
}

std::string fmt(double v) { return format_double(v); }

void cmd_solve(Run& run) {
  const auto& cfg = run.config();
  const bool two = cfg.market.groups.size() == 2;
  const bool counts = all_counts(cfg.market);
  std::vector<std::string> systems = cfg.systems;
  if (systems.empty()) {
    if (two && counts) systems = {"closed", "open"};
    if (two) systems.push_back("limiting");
    systems.push_back("mfg");
  }
  const TimeGrid grid = run.grid();
  for (const auto& s : systems) {
    if (s == "closed") {
      const auto m = run.market(Mode::ClosedLoop);
      const auto path = integrate_backward(closed_loop_system(m), grid);
      run.file("closed.csv", to_csv(path));
      const auto rate = liquidity_rate(path, m);
      CsvTable table({"t", "liquidity_rate"});
      for (std::size_t n = 0; n < grid.n_points(); ++n) {
        const double row[2] = {grid.t(n), rate.at_node(n)};
        table.add_row(row);
      }
      run.file("liquidity_rate.csv", table);
    } else if (s == "open") {
      const auto m = run.market(Mode::OpenLoop);
      run.file("open.csv", to_csv(integrate_backward(open_loop_system(m), grid)));
    } else if (s == "limiting") {
      const auto m = run.market(Mode::Limiting);
      run.file("limiting.csv", to_csv(integrate_backward(limiting_system(m), grid)));
    } else {
      const auto m = run.market(Mode::MeanField);
      run.file("mfg.csv", to_csv(integrate_backward(mfg_system(m), grid)));
    }
    run.info("solved " + s + " system on " + std::to_string(grid.n_steps()) + " steps");
  }
}

struct ChosenStrategy {
  ValidatedMarket market;
  FeedbackStrategy strategy;
};

ChosenStrategy choose_strategy(Run& run, const TimeGrid& grid) {
  const auto& cfg = run.config();
  if (!all_counts(cfg.market)) throw RejectedParams("simulation requires n_banks for every group");
  std::string kind = cfg.sim.strategy;
  if (kind == "auto") kind = cfg.market.groups.size() == 2 ? "closed" : "mfg";
  if (kind == "closed") {
    auto m = run.market(Mode::ClosedLoop);
    auto s = feedback_closed(integrate_backward(closed_loop_system(m), grid), m);
    return {std::move(m), std::move(s)};
  }
  if (kind == "open") {
    auto m = run.market(Mode::OpenLoop);
    auto s = feedback_open(integrate_backward(open_loop_system(m), grid), m);
    return {std::move(m), std::move(s)};
  }
  if (kind == "limiting") {
    auto m = run.market(Mode::Limiting);
    auto s = feedback_closed(integrate_backward(limiting_system(m), grid), m);
    return {std::move(m), std::move(s)};
  }
  auto m = run.market(Mode::MeanField);
  auto s = feedback_mfg(integrate_backward(mfg_system(m), grid), m);
  return {std::move(m), std::move(s)};
}

InitialState initial_state(const RunConfig& cfg) { return InitialState{cfg.x0_mean, cfg.x0_sd}; }

void cmd_simulate(Run& run) {
  const auto& cfg = run.config();
  const TimeGrid grid = run.grid();
  const auto chosen = choose_strategy(run, grid);
  const NoiseSpec noise(chosen.market, cfg.seed, cfg.sim.paths);
  const SimulationOptions options{cfg.threads, cfg.sim.raw};
  auto ensemble = std::make_shared<TrajectoryEnsemble>(
      simulate_closed_loop(chosen.market, chosen.strategy, initial_state(cfg), noise, grid, options));

  run.file("fan.csv", group_average_fan(*ensemble, cfg.sim.quantiles));
  if (ensemble->n_groups() == 2) run.file("distance.csv", distance_summary(*ensemble));

  const auto mfg_market = run.market(Mode::MeanField);
  const auto mfg = feedback_mfg(integrate_backward(mfg_system(mfg_market), grid), mfg_market);
  const auto means = simulate_mfg_mean(mfg_market, mfg, cfg.x0_mean, noise, grid, {cfg.threads, false});
  run.file("mfg_mean.csv", mfg_mean_summary(means));

  if (cfg.sim.raw) {
    run.deferred("states.bin", [ensemble](const fs::path& target) { dump_raw_states(*ensemble, target); });
  }
  run.info("simulated " + std::to_string(cfg.sim.paths) + " paths of " + std::to_string(ensemble->n_banks()) +
           " banks over " + std::to_string(grid.n_steps()) + " steps");
}

void cmd_sweep(Run& run) {
  const auto& cfg = run.config();
  if (cfg.sweep.axis.empty() || cfg.sweep.values.empty()) throw ConfigError("sweep needs [sweep] axis and values");
  SweepAxis axis;
  try {
    axis = parse_sweep_axis(cfg.sweep.axis);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto result = sweep_liquidity(cfg.market, axis, cfg.sweep.values, cfg.steps, cfg.threads);

  CsvTable summary({"value", "rate0"});
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    const double row[2] = {result.values[i], result.rate0[i]};
    summary.add_row(row);
    CsvTable curve({"t", "liquidity_rate"});
    const auto& g = result.curves[i].grid();
    for (std::size_t n = 0; n < g.n_points(); ++n) {
      const double point[2] = {g.t(n), result.curves[i].at_node(n)};
      curve.add_row(point);
    }
    run.file("sweep_curve_" + std::to_string(i + 1) + ".csv", curve);
  }
  run.file("sweep.csv", summary);

  // Smallest signed step of rate(0) in the expected direction.
  const double sign = cfg.sweep.expect == "decreasing" ? -1.0 : 1.0;
  double min_step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < result.rate0.size(); ++i) {
    min_step = std::min(min_step, sign * (result.rate0[i] - result.rate0[i - 1]));
  }
  std::ostringstream detail;
  detail << "rate(0) over " << to_string(axis) << " =";
  for (double r : result.rate0) detail << ' ' << fmt(r);
  if (cfg.sweep.expect == "none") {
    run.verdict(true, "sweep", detail.str(), min_step, 0.0);
  } else {
    detail << "; expected strictly " << cfg.sweep.expect << ", smallest step " << fmt(min_step);
    run.verdict(min_step > 0.0, "sweep", detail.str(), min_step, 0.0);
  }
}

void cmd_check(Run& run) {
  const auto& cfg = run.config();
  const std::string& name = cfg.check.name;
  const bool all = name == "all";
  const bool two = cfg.market.groups.size() == 2;
  const bool counts = all_counts(cfg.market);
  const TimeGrid grid = run.grid();
  auto wanted = [&](const char* check, bool applicable) {
    if (name == check && !applicable) throw RejectedParams(std::string("check '") + check + "' does not apply to this market");
    return (all || name == check) && applicable;
  };

  if (wanted("identity", two) || wanted("bounds", two)) {
    const auto m = run.market(Mode::Limiting);
    const auto path = integrate_backward(limiting_system(m), grid);
    if (all || name == "identity") {
      const auto r = check_sum_identity(path);
      CsvTable table({"t", "etahat4_plus_etahat5", "phihat4_plus_phihat5"});
      for (std::size_t n = 0; n < grid.n_points(); ++n) {
        const double row[3] = {grid.t(n), path.at(n, "etahat4") + path.at(n, "etahat5"),
                               path.at(n, "phihat4") + path.at(n, "phihat5")};
        table.add_row(row);
      }
      run.file("check_identity.csv", table);
      const double worst = std::max(r.max_eta_sum, r.max_phi_sum);
      run.verdict(worst < 1e-8, "identity", "max sum " + fmt(worst) + " < 1e-08", worst, 1e-8);
    }
    if (all || name == "bounds") {
      const auto r = check_prop1_bounds(path, m);
      CsvTable table({"min_slack", "t", "lower"});
      const double row[3] = {r.min_slack, r.time, r.lower ? 1.0 : 0.0};
      table.add_row(row);
      run.file("check_bounds.csv", table);
      run.verdict(r.min_slack >= -1e-8, "bounds",
                  "min slack " + fmt(r.min_slack) + " (" + r.component + " at t=" + fmt(r.time) + ") >= -1e-08",
                  r.min_slack, -1e-8);
    }
  }
  if (wanted("row_sums", true)) {
    const auto m = run.market(Mode::MeanField);
    const auto path = integrate_backward(mfg_system(m), grid);
    const double worst = check_mfg_row_sums(path, m.n_groups());
    CsvTable table({"max_row_sum"});
    const double row[1] = {worst};
    table.add_row(row);
    run.file("check_row_sums.csv", table);
    run.verdict(worst < 1e-8, "row_sums", "max row sum " + fmt(worst) + " < 1e-08", worst, 1e-8);
  }
  if (wanted("convergence", two)) {
    const auto r = convergence_to_mfg(cfg.market, cfg.check.n_values, cfg.steps);
    CsvTable table({"n_total", "closed_gap", "open_gap"});
    bool decreasing = true;
    for (std::size_t i = 0; i < r.n_values.size(); ++i) {
      const double row[3] = {static_cast<double>(r.n_values[i]), r.closed_gaps[i], r.open_gaps[i]};
      table.add_row(row);
      if (i > 0 && !(r.closed_gaps[i] < r.closed_gaps[i - 1] && r.open_gaps[i] < r.open_gaps[i - 1])) {
        decreasing = false;
      }
    }
    run.file("check_convergence.csv", table);
    const double last = r.closed_gaps.empty() ? 0.0 : r.closed_gaps.back();
    run.verdict(decreasing, "convergence",
                "gaps strictly decreasing; last closed gap " + fmt(last) + ", slopes closed " + fmt(r.closed_slope) +
                    " open " + fmt(r.open_slope),
                last, 0.0);
  }
  if (wanted("hjb", two && counts)) {
    const auto m = run.market(Mode::ClosedLoop);
    const auto path = integrate_backward(closed_loop_system(m), grid);
    const auto r = hjb_residual(path, m, cfg.check.samples, cfg.seed);
    CsvTable table({"max_residual", "max_scaled_residual", "max_control_gap", "samples"});
    const double row[4] = {r.max_residual, r.max_scaled_residual, r.max_control_gap, static_cast<double>(r.samples)};
    table.add_row(row);
    run.file("check_hjb.csv", table);
    run.verdict(r.max_scaled_residual < 1e-4, "hjb",
                "max residual / (1 + |x|^2) " + fmt(r.max_scaled_residual) + " < 1e-04", r.max_scaled_residual, 1e-4);
  }
}

void cmd_prob(Run& run) {
  const auto& cfg = run.config();
  const TimeGrid grid = run.grid();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool single = cfg.market.groups.size() == 1 && cfg.market.groups[0].n_banks.has_value();

  double analytic = nan, shifted = nan;
  if (single) {
    const auto& g = cfg.market.groups[0];
    const double n = static_cast<double>(*g.n_banks);
    analytic = analytic_systemic_probability(cfg.prob.level, g.sigma, n, cfg.market.horizon);
    shifted = analytic_systemic_probability(cfg.prob.level - discrete_barrier_shift(g.sigma, n, grid.dt()), g.sigma, n,
                                            cfg.market.horizon);
    run.result("analytic systemic probability = " + fmt(analytic));
  }

  std::optional<HittingEstimate> mc;
  if (cfg.sim.paths > 0) {
    const auto chosen = choose_strategy(run, grid);
    const NoiseSpec noise(chosen.market, cfg.seed, cfg.sim.paths);
    DefaultSpec barrier;
    barrier.level = cfg.prob.level;
    if (cfg.prob.target == "group") barrier.target = DefaultSpec::Target::GroupAverage;
    if (cfg.prob.target == "bank") barrier.target = DefaultSpec::Target::SingleBank;
    if (cfg.prob.group == 0 || cfg.prob.bank == 0) throw ConfigError("prob.group and prob.bank are 1-based");
    barrier.group = cfg.prob.group - 1;
    barrier.bank = cfg.prob.bank - 1;
    mc = mc_hitting_probability(chosen.market, chosen.strategy, initial_state(cfg), noise, grid, barrier,
                                {cfg.threads, false});
    run.result("monte carlo probability = " + fmt(mc->probability) + " +- " + fmt(mc->std_error));
  }

  CsvTable table({"level", "analytic", "analytic_discrete", "mc_probability", "mc_std_error", "hits", "paths"});
  const double row[7] = {cfg.prob.level,
                         analytic,
                         shifted,
                         mc ? mc->probability : nan,
                         mc ? mc->std_error : nan,
                         mc ? static_cast<double>(mc->hits) : nan,
                         mc ? static_cast<double>(mc->n_paths) : nan};
  table.add_row(row);
  run.file("prob.csv", table);

  if (single && mc && cfg.prob.target == "global") {
    const double deficit = analytic - shifted;
    const double lo = analytic - 3.0 * mc->std_error - deficit;
    const double hi = analytic + 3.0 * mc->std_error;
    run.verdict(mc->probability >= lo && mc->probability <= hi, "prob",
                "monte carlo " + fmt(mc->probability) + " within [" + fmt(lo) + ", " + fmt(hi) + "]",
                mc->probability - analytic, 3.0 * mc->std_error + deficit);
  }
}

}  // namespace

int run_command(const std::string& command, const RunConfig& config, bool quiet, std::ostream& out,
                std::ostream& err) {
  try {
    Run run(command, config, quiet, out, err);
    if (command == "solve") {
      cmd_solve(run);
    } else if (command == "simulate") {
      cmd_simulate(run);
    } else if (command == "sweep") {
      cmd_sweep(run);
    } else if (command == "check") {
      cmd_check(run);
    } else if (command == "prob") {
      cmd_prob(run);
    } else {
      err << "error: unknown command '" << command << "'\n";
      return exit_rejected;
    }
    return run.finish();
  } catch (const BlowUp& e) {
    err << "error: coefficient blow-up in component " << e.component() << " at t=" << fmt(e.time()) << '\n';
    return exit_blow_up;
  } catch (const SimulationBlowUp& e) {
    err << "error: " << e.what() << '\n';
    return exit_blow_up;
  } catch (const RejectedParams& e) {
    err << "error: rejected parameters: " << e.what() << '\n';
    return exit_rejected;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_rejected;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return exit_rejected;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failed_check;
  }
}

}  // namespace interbank::cli
