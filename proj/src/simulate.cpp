#include "interbank/simulate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "interbank/philox.hpp"

namespace interbank {

NoiseSpec::NoiseSpec(const ValidatedMarket& market, std::uint64_t seed, std::size_t n_paths)
    : seed_(seed), n_paths_(n_paths) {
  if (n_paths == 0) throw std::invalid_argument("n_paths must be positive");
  const double rho = market.rho();
  const double outer = std::sqrt(1.0 - rho * rho);
  for (std::size_t k = 0; k < market.n_groups(); ++k) {
    const double rk = market.group(k).rho_k;
    Loadings l{rho, outer * rk, outer * std::sqrt(1.0 - rk * rk)};
    const double norm = l.global * l.global + l.group * l.group + l.own * l.own;
    if (std::abs(norm - 1.0) >= 1e-14) throw std::logic_error("diffusion loadings are not unit norm");
    loadings_.push_back(l);
  }
}

void NoiseSpec::draws(std::uint64_t path, std::uint32_t step, std::size_t count, double* out) const {
  std::size_t start = 0;
  for (; start + 4 <= count; start += 4) normal_block(seed_, path, step, static_cast<std::uint32_t>(start / 4), out + start);
  if (start < count) {
    double block[4];
    normal_block(seed_, path, step, static_cast<std::uint32_t>(start / 4), block);
    std::copy(block, block + (count - start), out + start);
  }
}

namespace {

std::vector<std::size_t> group_index(const std::vector<std::size_t>& banks_per_group) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < banks_per_group.size(); ++k) out.insert(out.end(), banks_per_group[k], k);
  return out;
}

std::vector<std::size_t> bank_counts(const ValidatedMarket& market) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < market.n_groups(); ++k) out.push_back(static_cast<std::size_t>(market.n_banks(k)));
  return out;
}

}  // namespace

IncrementStream::IncrementStream(const NoiseSpec& spec, const TimeGrid& grid, std::vector<std::size_t> banks_per_group)
    : spec_(spec),
      sqrt_dt_(std::sqrt(grid.dt())),
      banks_per_group_(std::move(banks_per_group)),
      group_of_(group_index(banks_per_group_)) {
  if (banks_per_group_.size() != spec.n_groups()) throw std::invalid_argument("group count mismatch");
}

void IncrementStream::drivers(std::uint64_t path, std::size_t step, std::span<double> out) const {
  if (out.size() != n_drivers()) throw std::invalid_argument("driver buffer size mismatch");
  spec_.draws(path, static_cast<std::uint32_t>(step), out.size(), out.data());
  for (double& v : out) v *= sqrt_dt_;
}

void IncrementStream::composite(std::uint64_t path, std::size_t step, std::span<double> out) const {
  if (out.size() != n_banks()) throw std::invalid_argument("bank buffer size mismatch");
  std::vector<double> z(n_drivers());
  drivers(path, step, z);
  const std::size_t d = banks_per_group_.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& l = spec_.loadings(group_of_[i]);
    out[i] = l.global * z[0] + l.group * z[1 + group_of_[i]] + l.own * z[1 + d + i];
  }
}

IncrementStream generate_increments(const NoiseSpec& spec, const TimeGrid& grid,
                                    std::vector<std::size_t> banks_per_group) {
  return IncrementStream(spec, grid, std::move(banks_per_group));
}

InitialState InitialState::constant(std::vector<double> mean) {
  InitialState s;
  s.sd.assign(mean.size(), 0.0);
  s.mean = std::move(mean);
  return s;
}

TrajectoryEnsemble::TrajectoryEnsemble(TimeGrid grid, std::size_t n_paths, std::vector<std::size_t> banks_per_group,
                                       bool keep_states)
    : grid_(grid),
      n_paths_(n_paths),
      banks_per_group_(std::move(banks_per_group)),
      group_of_(group_index(banks_per_group_)),
      group_avg_(n_paths * banks_per_group_.size() * grid.n_points()),
      global_avg_(n_paths * grid.n_points()) {
  if (keep_states) states_.assign(n_paths * group_of_.size() * grid.n_points(), 0.0);
}

MeanEnsemble::MeanEnsemble(TimeGrid grid, std::size_t n_paths, std::size_t n_groups)
    : grid_(grid), n_paths_(n_paths), n_groups_(n_groups), values_(n_paths * n_groups * grid.n_points()) {}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t, std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

// Strategy coefficients and drift inputs tabulated on the simulation grid.
struct DriftTable {
  std::size_t d = 0;
  std::size_t steps = 0;
  std::vector<double> gain;       // [n][k]
  std::vector<double> weight;     // [n][k][h]
  std::vector<double> intercept;  // [n][k]  intercept plus growth rate

  DriftTable(const ValidatedMarket& market, const FeedbackStrategy& strategy, const TimeGrid& grid)
      : d(market.n_groups()), steps(grid.n_steps()) {
    if (strategy.n_groups() != d) throw std::invalid_argument("strategy and market group counts differ");
    if (std::abs(strategy.grid().horizon() - grid.horizon()) > 1e-12 * grid.horizon()) {
      throw std::invalid_argument("strategy horizon does not match the simulation grid");
    }
    gain.resize(steps * d);
    weight.resize(steps * d * d);
    intercept.resize(steps * d);
    const bool same_grid = strategy.grid() == grid;
    std::vector<double> w(d);
    for (std::size_t n = 0; n < steps; ++n) {
      const double t = grid.t(n);
      for (std::size_t k = 0; k < d; ++k) {
        double g = 0.0, c = 0.0;
        if (same_grid) {
          g = strategy.gap_gain(k, n);
          c = strategy.intercept(k, n);
          for (std::size_t h = 0; h < d; ++h) w[h] = strategy.avg_weight(k, h, n);
        } else {
          strategy.coefficients(k, t, g, w, c);
        }
        gain[n * d + k] = g;
        intercept[n * d + k] = c + market.group(k).gamma(t);
        std::copy(w.begin(), w.end(), weight.begin() + static_cast<std::ptrdiff_t>((n * d + k) * d));
      }
    }
  }
};

// Simulates one path of all banks; observe(node, states, group_averages, global_average)
// is called at every node and returns false to stop early.
class BankPathKernel {
 public:
  BankPathKernel(const ValidatedMarket& market, const FeedbackStrategy& strategy, const InitialState& x0,
                 const NoiseSpec& spec, const TimeGrid& grid)
      : table_(market, strategy, grid),
        spec_(spec),
        grid_(grid),
        counts_(bank_counts(market)),
        group_of_(group_index(counts_)),
        x0_(x0) {
    const std::size_t d = counts_.size();
    if (x0.mean.size() != d || x0.sd.size() != d) throw std::invalid_argument("initial state needs one entry per group");
    const double sqrt_dt = std::sqrt(grid.dt());
    for (std::size_t k = 0; k < d; ++k) {
      const auto& l = spec.loadings(k);
      const double s = market.group(k).sigma * sqrt_dt;
      scale_.push_back({l.global * s, l.group * s, l.own * s});
    }
    n_drivers_ = 1 + d + group_of_.size();
  }

  std::size_t n_banks() const { return group_of_.size(); }

  template <class Observer>
  void run(std::uint64_t path, Observer&& observe) {
    const std::size_t d = counts_.size();
    const std::size_t nb = group_of_.size();
    x_.resize(nb);
    z_.resize(std::max(n_drivers_, nb));
    avg_.resize(d);
    drift_.resize(d);

    const bool random_start = std::any_of(x0_.sd.begin(), x0_.sd.end(), [](double s) { return s != 0.0; });
    if (random_start) spec_.draws(path, initial_state_step, nb, z_.data());
    for (std::size_t i = 0; i < nb; ++i) {
      const std::size_t k = group_of_[i];
      x_[i] = x0_.mean[k] + (random_start ? x0_.sd[k] * z_[i] : 0.0);
    }
    double global = averages();
    if (!observe(std::size_t{0}, x_, avg_, global)) return;

    const double dt = grid_.dt();
    for (std::size_t n = 0; n < grid_.n_steps(); ++n) {
      spec_.draws(path, static_cast<std::uint32_t>(n), n_drivers_, z_.data());
      const double* gain = table_.gain.data() + n * d;
      const double* weight = table_.weight.data() + n * d * d;
      const double* intercept = table_.intercept.data() + n * d;
      for (std::size_t k = 0; k < d; ++k) {
        double c = gain[k] * avg_[k] + intercept[k];
        for (std::size_t h = 0; h < d; ++h) c += weight[k * d + h] * avg_[h];
        drift_[k] = c;
      }
      const double* own = z_.data() + 1 + d;
      double* x = x_.data();
      double total = 0.0;
      for (std::size_t k = 0, i = 0; k < d; ++k) {
        const auto& s = scale_[k];
        const double shift = drift_[k] * dt + s.global * z_[0] + s.group * z_[1 + k];
        const double decay = 1.0 - gain[k] * dt;
        double sum = 0.0;
        for (const std::size_t end = i + counts_[k]; i < end; ++i) {
          x[i] = decay * x[i] + shift + s.own * own[i];
          sum += x[i];
        }
        avg_[k] = sum / static_cast<double>(counts_[k]);
        total += sum;
      }
      global = total / static_cast<double>(nb);
      if (!std::isfinite(global)) {
        throw SimulationBlowUp("non-finite state at t = " + std::to_string(grid_.t(n + 1)));
      }
      if (!observe(n + 1, x_, avg_, global)) return;
    }
  }

 private:
  double averages() {
    const std::size_t d = counts_.size();
    double total = 0.0;
    std::size_t i = 0;
    for (std::size_t k = 0; k < d; ++k) {
      double sum = 0.0;
      for (std::size_t j = 0; j < counts_[k]; ++j, ++i) sum += x_[i];
      avg_[k] = sum / static_cast<double>(counts_[k]);
      total += sum;
    }
    return total / static_cast<double>(group_of_.size());
  }

  struct Scale {
    double global, group, own;
  };

  DriftTable table_;
  const NoiseSpec& spec_;
  TimeGrid grid_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> group_of_;
  const InitialState& x0_;
  std::vector<Scale> scale_;
  std::size_t n_drivers_ = 0;
  std::vector<double> x_, z_, avg_, drift_;
};

}  // namespace

TrajectoryEnsemble simulate_closed_loop(const ValidatedMarket& market, const FeedbackStrategy& strategy,
                                        const InitialState& x0, const NoiseSpec& spec, const TimeGrid& grid,
                                        const SimulationOptions& options) {
  TrajectoryEnsemble out(grid, spec.n_paths(), bank_counts(market), options.keep_states);
  const std::size_t d = market.n_groups();
  parallel_for(spec.n_paths(), options.threads, [&](std::size_t begin, std::size_t end) {
    BankPathKernel kernel(market, strategy, x0, spec, grid);
    for (std::size_t p = begin; p < end; ++p) {
      double* global_row = out.global_average_row(p);
      kernel.run(p, [&](std::size_t node, const std::vector<double>& x, const std::vector<double>& avg, double global) {
        global_row[node] = global;
        for (std::size_t k = 0; k < d; ++k) out.group_average_row(p, k)[node] = avg[k];
        if (out.has_states()) {
          for (std::size_t i = 0; i < x.size(); ++i) out.state_row(p, i)[node] = x[i];
        }
        return true;
      });
    }
  });
  return out;
}

MeanEnsemble simulate_mfg_mean(const ValidatedMarket& market, const FeedbackStrategy& mfg_strategy,
                               std::span<const double> m0, const NoiseSpec& spec, const TimeGrid& grid,
                               const SimulationOptions& options) {
  const std::size_t d = market.n_groups();
  if (m0.size() != d) throw std::invalid_argument("initial means need one entry per group");
  const DriftTable table(market, mfg_strategy, grid);
  MeanEnsemble out(grid, spec.n_paths(), d);
  const double sqrt_dt = std::sqrt(grid.dt());
  std::vector<double> common_scale(d), group_scale(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double s = market.group(k).sigma * sqrt_dt;
    common_scale[k] = spec.loadings(k).global * s;
    group_scale[k] = spec.loadings(k).group * s;
  }

  parallel_for(spec.n_paths(), options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> m(d), next(d), z(1 + d);
    for (std::size_t p = begin; p < end; ++p) {
      std::copy(m0.begin(), m0.end(), m.begin());
      for (std::size_t k = 0; k < d; ++k) out.row(p, k)[0] = m[k];
      for (std::size_t n = 0; n < grid.n_steps(); ++n) {
        spec.draws(p, static_cast<std::uint32_t>(n), 1 + d, z.data());
        for (std::size_t k = 0; k < d; ++k) {
          double drift = table.intercept[n * d + k];
          for (std::size_t h = 0; h < d; ++h) drift += table.weight[(n * d + k) * d + h] * m[h];
          next[k] = m[k] + drift * grid.dt() + common_scale[k] * z[0] + group_scale[k] * z[1 + k];
          if (!std::isfinite(next[k])) {
            throw SimulationBlowUp("non-finite conditional mean at t = " + std::to_string(grid.t(n + 1)));
          }
        }
        m.swap(next);
        for (std::size_t k = 0; k < d; ++k) out.row(p, k)[n + 1] = m[k];
      }
    }
  });
  return out;
}

std::vector<double> distance_process(const TrajectoryEnsemble& ensemble, std::size_t path) {
  if (ensemble.n_groups() != 2) throw std::invalid_argument("distance process needs two groups");
  std::vector<double> out(ensemble.n_points());
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = ensemble.group_average(path, 0, n) - ensemble.group_average(path, 1, n);
  }
  return out;
}

HittingEstimate mc_hitting_probability(const ValidatedMarket& market, const FeedbackStrategy& strategy,
                                       const InitialState& x0, const NoiseSpec& spec, const TimeGrid& grid,
                                       const DefaultSpec& barrier, const SimulationOptions& options) {
  std::size_t bank_offset = 0;
  if (barrier.target != DefaultSpec::Target::GlobalAverage && barrier.group >= market.n_groups()) {
    throw std::invalid_argument("default target group out of range");
  }
  if (barrier.target == DefaultSpec::Target::SingleBank) {
    for (std::size_t k = 0; k < barrier.group; ++k) bank_offset += static_cast<std::size_t>(market.n_banks(k));
    if (barrier.bank >= static_cast<std::size_t>(market.n_banks(barrier.group))) {
      throw std::invalid_argument("default target bank out of range");
    }
    bank_offset += barrier.bank;
  }

  std::vector<unsigned char> hit(spec.n_paths(), 0);
  parallel_for(spec.n_paths(), options.threads, [&](std::size_t begin, std::size_t end) {
    BankPathKernel kernel(market, strategy, x0, spec, grid);
    for (std::size_t p = begin; p < end; ++p) {
      kernel.run(p, [&](std::size_t, const std::vector<double>& x, const std::vector<double>& avg, double global) {
        double value = global;
        if (barrier.target == DefaultSpec::Target::GroupAverage) value = avg[barrier.group];
        if (barrier.target == DefaultSpec::Target::SingleBank) value = x[bank_offset];
        if (value <= barrier.level) {
          hit[p] = 1;
          return false;
        }
        return true;
      });
    }
  });

  const std::size_t hits = std::accumulate(hit.begin(), hit.end(), std::size_t{0});
  const double n = static_cast<double>(spec.n_paths());
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n), hits, spec.n_paths()};
}

namespace {

// Linear-interpolation sample quantile of sorted data.
double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

std::string quantile_label(double q) {
  std::ostringstream s;
  s << "q" << static_cast<int>(std::lround(q * 100.0));
  return s.str();
}

}  // namespace

CsvTable group_average_fan(const TrajectoryEnsemble& ensemble, std::span<const double> quantiles) {
  std::vector<std::string> header{"t"};
  for (std::size_t k = 0; k < ensemble.n_groups(); ++k) {
    const std::string g = "group" + std::to_string(k + 1) + "_";
    header.push_back(g + "mean");
    for (double q : quantiles) header.push_back(g + quantile_label(q));
  }
  CsvTable table(header);
  std::vector<double> sample(ensemble.n_paths());
  std::vector<double> row;
  for (std::size_t n = 0; n < ensemble.n_points(); ++n) {
    row.assign(1, ensemble.grid().t(n));
    for (std::size_t k = 0; k < ensemble.n_groups(); ++k) {
      for (std::size_t p = 0; p < sample.size(); ++p) sample[p] = ensemble.group_average(p, k, n);
      row.push_back(std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size()));
      std::sort(sample.begin(), sample.end());
      for (double q : quantiles) row.push_back(sorted_quantile(sample, q));
    }
    table.add_row(row);
  }
  return table;
}

CsvTable distance_summary(const TrajectoryEnsemble& ensemble) {
  if (ensemble.n_groups() != 2) throw std::invalid_argument("distance summary needs two groups");
  CsvTable table({"t", "distance_mean", "distance_sd"});
  const double n_paths = static_cast<double>(ensemble.n_paths());
  for (std::size_t n = 0; n < ensemble.n_points(); ++n) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t p = 0; p < ensemble.n_paths(); ++p) {
      const double v = ensemble.group_average(p, 0, n) - ensemble.group_average(p, 1, n);
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n_paths;
    const double var = ensemble.n_paths() > 1 ? std::max(0.0, (sq - n_paths * mean * mean) / (n_paths - 1.0)) : 0.0;
    const double row[3] = {ensemble.grid().t(n), mean, std::sqrt(var)};
    table.add_row(row);
  }
  return table;
}

CsvTable mfg_mean_summary(const MeanEnsemble& ensemble) {
  std::vector<std::string> header{"t"};
  for (std::size_t k = 0; k < ensemble.n_groups(); ++k) header.push_back("m" + std::to_string(k + 1) + "_mean");
  CsvTable table(header);
  std::vector<double> row(header.size());
  for (std::size_t n = 0; n < ensemble.grid().n_points(); ++n) {
    row[0] = ensemble.grid().t(n);
    for (std::size_t k = 0; k < ensemble.n_groups(); ++k) {
      double sum = 0.0;
      for (std::size_t p = 0; p < ensemble.n_paths(); ++p) sum += ensemble.mean(p, k, n);
      row[1 + k] = sum / static_cast<double>(ensemble.n_paths());
    }
    table.add_row(row);
  }
  return table;
}

void dump_raw_states(const TrajectoryEnsemble& ensemble, const std::filesystem::path& target) {
  static_assert(std::endian::native == std::endian::little, "raw dump assumes a little-endian host");
  if (!ensemble.has_states()) throw std::invalid_argument("ensemble was simulated without bank states");
  std::ostringstream header;
  header << "interbank-raw v1 float64le n_paths=" << ensemble.n_paths() << " n_banks=" << ensemble.n_banks()
         << " n_points=" << ensemble.n_points() << " order=path,bank,node\n";
  std::string content = header.str();
  const auto& raw = ensemble.raw_states();
  const auto* bytes = reinterpret_cast<const char*>(raw.data());
  content.append(bytes, raw.size() * sizeof(double));
  write_file_atomic(target, content);
}

}  // namespace interbank
