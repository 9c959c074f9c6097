// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "interbank/analysis.hpp"
#include "interbank/cli.hpp"
#include "interbank/equilibrium.hpp"
#include "interbank/riccati.hpp"
#include "interbank/simulate.hpp"

using namespace interbank;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, const std::string& title, bool pass, double elapsed, double budget, const std::string& detail) {
  const bool in_time = elapsed < budget;
  const bool ok = pass && in_time;
  if (!ok) ++failures;
  std::printf("%s criterion %d (%s): %s; %.2f s (limit %.0f s)%s\n", ok ? "PASS" : "FAIL", id, title.c_str(),
              detail.c_str(), elapsed, budget, in_time ? "" : " [too slow]");
  std::fflush(stdout);
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

GroupParams group(double q, double eps, double c, double lambda) {
  GroupParams g;
  g.q = q;
  g.eps = eps;
  g.c = c;
  g.lambda = lambda;
  return g;
}

MarketParams figure_market(double lambda1, double lambda2, std::int64_t n1, std::int64_t n2, double horizon) {
  MarketParams p;
  p.horizon = horizon;
  p.groups = {group(2.0, 5.0, 0.0, lambda1), group(2.0, 4.5, 0.0, lambda2)};
  p.groups[0].n_banks = n1;
  p.groups[1].n_banks = n2;
  return p;
}

MarketParams with_betas(MarketParams p, double b1) {
  for (auto& g : p.groups) g.n_banks.reset();
  p.groups[0].beta = b1;
  p.groups[1].beta = 1.0 - b1;
  return p;
}

CoefficientPath solve(OdeSystem (*make)(const ValidatedMarket&), const ValidatedMarket& m, std::size_t steps = 2000) {
  return integrate_backward(make(m), TimeGrid(m.horizon(), steps));
}

double scalar_riccati(double kappa, double q, double e, double c, double s) {
  const double root = std::sqrt(q * q + kappa * e);
  const double up = (-q + root) / kappa;
  const double down = (-q - root) / kappa;
  const double ratio = (c - up) / (c - down) * std::exp(-2.0 * root * s);
  return (up - ratio * down) / (1.0 - ratio);
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s;
}

void criterion_identity() {
  const auto start = Clock::now();
  const auto m = validate(with_betas(figure_market(0.1, 0.5, 2, 8, 1.0), 0.2), Mode::Limiting);
  const auto r = check_sum_identity(solve(limiting_system, m));
  const double worst = std::max(r.max_eta_sum, r.max_phi_sum);
  report(1, "cross-coefficient sum identity", worst < 1e-8, seconds_since(start), 1.0,
         "max |etahat4+etahat5| = " + num(r.max_eta_sum) + ", max |phihat4+phihat5| = " + num(r.max_phi_sum));
}

void criterion_bounds() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  for (int draw = 0; draw < 100; ++draw) {
    MarketParams p;
    p.horizon = 0.5 + 4.5 * u(rng);
    for (int k = 0; k < 2; ++k) {
      const double q = 0.2 + 2.8 * u(rng);
      p.groups.push_back(group(q, q * q + 5.0 * u(rng), 2.0 * u(rng), u(rng)));
    }
    const auto m = validate(with_betas(p, 0.05 + 0.9 * u(rng)), Mode::Limiting);
    const auto r = check_prop1_bounds(solve(limiting_system, m), m);
    if (r.min_slack < worst) {
      worst = r.min_slack;
      where = "draw " + std::to_string(draw) + ", " + r.component + (r.lower ? " lower" : " upper") + " at t = " +
              num(r.time);
    }
  }
  report(2, "exponential bounds on 100 random draws", worst >= -1e-8, seconds_since(start), 30.0,
         "min slack = " + num(worst) + " (" + where + ")");
}

void criterion_figures() {
  const auto start = Clock::now();
  const auto lambda = sweep_liquidity(figure_market(0.1, 0.5, 2, 8, 1.0), SweepAxis::Lambda2,
                                      {0.1, 0.3, 0.5, 0.7, 0.9});
  const bool lambda_ok = strictly_increasing(lambda.rate0);

  const auto m10 = validate(figure_market(0.1, 0.5, 2, 8, 10.0), Mode::ClosedLoop);
  const auto rate = liquidity_rate(solve(closed_loop_system, m10), m10);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t n = 0; n < rate.grid().n_points() && rate.grid().t(n) <= 5.0; ++n) {
    lo = std::min(lo, rate.at_node(n));
    hi = std::max(hi, rate.at_node(n));
  }
  const double spread = (hi - lo) / std::abs(rate.at_node(0));
  const bool flat_ok = spread < 0.01;

  const auto pop = sweep_liquidity(figure_market(0.5, 0.1, 2, 8, 1.0), SweepAxis::NTotal, {10, 50, 100, 500});
  const bool pop_ok = strictly_increasing(pop.rate0);

  report(3, "liquidity-rate shapes", lambda_ok && flat_ok && pop_ok, seconds_since(start), 5.0,
         std::string(lambda_ok ? "" : "NOT ") + "increasing in lambda2 [" + join(lambda.rate0) + "]; " +
             "relative spread on [0,5] at T=10 = " + num(spread) + (flat_ok ? "" : " (>= 1%)") + "; " +
             (pop_ok ? "" : "NOT ") + "increasing in N [" + join(pop.rate0) + "]");
}

void criterion_systemic() {
  const auto start = Clock::now();
  MarketParams p;
  p.horizon = 1.0;
  p.groups = {group(1.0, 2.0, 0.0, 0.0)};
  p.groups[0].n_banks = 10;
  const auto m = validate(p, Mode::MeanField);
  const TimeGrid grid(1.0, 2000);
  const auto strategy = feedback_mfg(integrate_backward(mfg_system(m), grid), m);
  const NoiseSpec noise(m, 4, 100000);
  DefaultSpec barrier;
  barrier.level = -0.62;
  SimulationOptions opts;
  opts.threads = std::max(1u, std::thread::hardware_concurrency());
  opts.keep_states = false;
  const auto mc = mc_hitting_probability(m, strategy, InitialState::constant({0.0}), noise, grid, barrier, opts);

  const double analytic = analytic_systemic_probability(-0.62, 1.0, 10.0, 1.0);
  const double deficit =
      analytic - analytic_systemic_probability(-0.62 - discrete_barrier_shift(1.0, 10.0, grid.dt()), 1.0, 10.0, 1.0);
  const double lo = analytic - 3.0 * mc.std_error - deficit;
  const double hi = analytic + 3.0 * mc.std_error;
  const bool pass = mc.probability >= lo && mc.probability <= hi;
  report(4, "systemic probability", pass, seconds_since(start), 60.0,
         "analytic = " + num(analytic) + ", monte carlo = " + num(mc.probability) + " +- " + num(mc.std_error) +
             ", discrete-monitoring deficit = " + num(deficit) + ", window [" + num(lo) + ", " + num(hi) + "]");
}

void criterion_mfg_consistency() {
  const auto start = Clock::now();
  const auto base = with_betas(figure_market(0.1, 0.5, 2, 8, 1.0), 0.2);
  const auto conv = convergence_to_mfg(base, {100, 1000, 10000});
  const auto& g = conv.closed_gaps;
  const bool decreasing = g[0] > g[1] && g[1] > g[2];
  const bool small = g[2] < 1e-2;

  const auto lim_m = validate(base, Mode::Limiting);
  const auto lim = solve(limiting_system, lim_m);
  const auto open_m = validate(with_bank_counts(base, {200000, 800000}), Mode::OpenLoop);
  const auto open = solve(open_loop_system, open_m);
  double open_gap = 0.0;
  for (std::size_t n = 0; n < lim.grid().n_points(); ++n) {
    open_gap = std::max(open_gap, std::abs(open.at(n, "etao2") - lim.at(n, "etahat4")));
    open_gap = std::max(open_gap, std::abs(open.at(n, "phio3") - lim.at(n, "phihat5")));
  }
  report(5, "finite population vs mean field", decreasing && small && open_gap < 1e-3, seconds_since(start), 10.0,
         "closed-loop gaps at N = 1e2, 1e3, 1e4: [" + join(g) + "] (slope " + num(conv.closed_slope) +
             "); open-loop gap at N = 1e6: " + num(open_gap));
}

void criterion_row_sums() {
  const auto start = Clock::now();
  std::mt19937_64 rng(7011);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int draws = 0;
  for (std::size_t d = 1; d <= 4; ++d) {
    for (int rep = 0; rep < 25; ++rep, ++draws) {
      MarketParams p;
      p.horizon = 0.5 + 2.5 * u(rng);
      std::vector<double> beta(d);
      double total = 0.0;
      for (auto& b : beta) total += (b = 0.1 + u(rng));
      for (std::size_t k = 0; k < d; ++k) {
        const double q = 0.2 + 2.8 * u(rng);
        auto gp = group(q, q * q + 5.0 * u(rng), 0.0, 0.1 + 0.9 * u(rng));
        gp.beta = beta[k] / total;
        gp.gamma = StepFunction(u(rng) - 0.5);
        gp.sigma = 0.5 + u(rng);
        p.groups.push_back(gp);
      }
      double sum = 0.0;
      for (std::size_t k = 0; k + 1 < d; ++k) sum += *p.groups[k].beta;
      p.groups[d - 1].beta = 1.0 - sum;
      const double threshold = validate(p, Mode::MeanField).terminal_weight_threshold();
      for (auto& gp : p.groups) gp.c = std::max(threshold, 0.0) + u(rng);
      const auto m = validate(p, Mode::MeanField);
      worst = std::max(worst, check_mfg_row_sums(solve(mfg_system, m), d));
    }
  }
  report(6, "mean-field row sums", worst < 1e-8, seconds_since(start), 10.0,
         "max |sum_h psi_kh| over " + std::to_string(draws) + " draws (d = 1..4) = " + num(worst));
}

void criterion_degeneracy() {
  const auto start = Clock::now();
  // (a) eps = q^2 and c = 0.
  auto flat = figure_market(0.1, 0.5, 2, 8, 1.0);
  for (auto& g : flat.groups) g.eps = g.q * g.q;
  bool zero = true;
  const auto flat_closed = validate(flat, Mode::ClosedLoop);
  for (auto make : {closed_loop_system, open_loop_system}) {
    for (double v : solve(make, flat_closed).raw()) zero = zero && v == 0.0;
  }
  const auto flat_lim = validate(with_betas(flat, 0.2), Mode::Limiting);
  for (double v : solve(limiting_system, flat_lim).raw()) zero = zero && v == 0.0;
  const auto flat_mfg = validate(with_betas(flat, 0.2), Mode::MeanField);
  for (double v : solve(mfg_system, flat_mfg).raw()) zero = zero && v == 0.0;

  // (b) no lending preference, no growth.
  auto solo = figure_market(0.0, 0.0, 2, 8, 1.0);
  solo.groups[0].c = 0.5;
  solo.groups[1].c = 1.5;
  const auto m = validate(solo, Mode::ClosedLoop);
  const auto path = solve(closed_loop_system, m);
  bool cross_zero = true;
  double closed_form_err = 0.0;
  for (std::size_t n = 0; n < path.grid().n_points(); ++n) {
    for (int i = 2; i <= 9; ++i) {
      cross_zero = cross_zero && path.at(n, "eta" + std::to_string(i)) == 0.0 &&
                   path.at(n, "phi" + std::to_string(i)) == 0.0;
    }
    const double s = 1.0 - path.grid().t(n);
    closed_form_err = std::max(closed_form_err,
                               std::abs(path.at(n, "eta1") - scalar_riccati(1.0 - 1.0 / 4.0, 2.0, 1.0, 0.5, s)));
    closed_form_err = std::max(closed_form_err,
                               std::abs(path.at(n, "phi1") - scalar_riccati(1.0 - 1.0 / 64.0, 2.0, 0.5, 1.5, s)));
  }
  report(7, "degenerate parameter sets", zero && cross_zero && closed_form_err < 1e-8, seconds_since(start), 2.0,
         std::string("zero paths ") + (zero ? "exact" : "NOT zero") + "; cross-group coefficients " +
             (cross_zero ? "exactly zero" : "NOT zero") + "; max error vs closed form = " + num(closed_form_err));
}

void criterion_order() {
  const auto start = Clock::now();
  OdeSystem sys;
  sys.labels = {"y"};
  sys.terminal = {0.0};
  sys.rhs = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = y[0] * y[0] + 4.0 * y[0] - 1.0; };
  const double exact = scalar_riccati(1.0, 2.0, 1.0, 0.0, 1.0);
  double err[3];
  const std::size_t steps[3] = {10, 20, 40};
  for (int i = 0; i < 3; ++i) err[i] = std::abs(integrate_backward(sys, TimeGrid(1.0, steps[i])).at(0, 0) - exact);
  const double r1 = err[0] / err[1], r2 = err[1] / err[2];
  const bool order_ok = r1 >= 12.0 && r1 <= 20.0 && r2 >= 12.0 && r2 <= 20.0;

  const auto m = validate(figure_market(0.1, 0.5, 2, 8, 1.0), Mode::ClosedLoop);
  const auto hjb = hjb_residual(solve(closed_loop_system, m), m, 100, 8);
  report(8, "solver order and HJB residual", order_ok && hjb.max_scaled_residual < 1e-4, seconds_since(start), 5.0,
         "error ratios " + num(r1) + ", " + num(r2) + "; max HJB residual / (1+|x|^2) = " +
             num(hjb.max_scaled_residual) + " over " + std::to_string(hjb.samples) + " samples");
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion_determinism() {
  const auto start = Clock::now();
  const auto root = fs::temp_directory_path() / "interbank_acceptance_determinism";
  fs::remove_all(root);

  cli::RunConfig base = cli::parse_config(
      "horizon = 1\nrho = 0.3\nsteps = 500\nseed = 1234\n"
      "[group.1]\nq = 2\neps = 5\nlambda = 0.1\nrho_k = 0.4\nn_banks = 2\nx0 = 0.2\nx0_sd = 0.1\n"
      "[group.2]\nq = 2\neps = 4.5\nlambda = 0.5\nn_banks = 8\nx0_sd = 0.3\ngamma = 0.1, 0.3\ngamma_breaks = 0.5\n"
      "[sim]\npaths = 400\nraw = true\n[sweep]\naxis = n_total\nvalues = 10, 50, 100\n[prob]\nlevel = -0.2\n");

  struct Job {
    const char* command;
    std::size_t threads;
    const char* tag;
  };
  const Job jobs[] = {{"simulate", 1, "a"}, {"simulate", 4, "b"}, {"simulate", 1, "c"}, {"sweep", 1, "a"},
                      {"sweep", 4, "b"},    {"sweep", 1, "c"},    {"prob", 1, "a"},     {"prob", 4, "b"},
                      {"prob", 1, "c"}};
  bool ran = true;
  for (const auto& job : jobs) {
    auto c = base;
    c.threads = job.threads;
    c.output_dir = (root / job.command / job.tag).string();
    std::ostringstream out, err;
    ran = ran && cli::run_command(job.command, c, true, out, err) == cli::exit_ok;
  }

  bool identical = ran;
  std::size_t compared = 0;
  for (const char* command : {"simulate", "sweep", "prob"}) {
    const auto ref = root / command / "a";
    if (!fs::exists(ref)) continue;
    for (const auto& entry : fs::directory_iterator(ref)) {
      const auto name = entry.path().filename();
      const auto ext = name.extension();
      if (ext != ".csv" && ext != ".bin") continue;
      const auto content = slurp(entry.path());
      for (const char* tag : {"b", "c"}) identical = identical && content == slurp(root / command / tag / name);
      ++compared;
    }
  }
  identical = identical && compared > 0;
  fs::remove_all(root);
  report(9, "byte-identical outputs", identical, seconds_since(start), 60.0,
         std::to_string(compared) + " files compared across 1 and 4 threads and a repeated run" +
             (ran ? "" : "; a command failed"));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {
      criterion_identity, criterion_bounds,     criterion_figures, criterion_systemic,   criterion_mfg_consistency,
      criterion_row_sums, criterion_degeneracy, criterion_order,   criterion_determinism};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      ++failures;
      std::printf("FAIL criterion: unexpected error: %s\n", e.what());
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
