#include "interbank/riccati.hpp"

#include <algorithm>
#include <cmath>

namespace interbank {

BlowUp::BlowUp(double time, std::string component)
    : std::runtime_error("coefficient '" + component + "' blew up at t = " + std::to_string(time)),
      time_(time),
      component_(std::move(component)) {}

CoefficientPath::CoefficientPath(TimeGrid grid, std::vector<std::string> labels, std::vector<double> values)
    : grid_(grid), labels_(std::move(labels)), values_(std::move(values)) {
  if (values_.size() != grid_.n_points() * labels_.size()) {
    throw std::invalid_argument("coefficient path size does not match grid and labels");
  }
}

bool CoefficientPath::has_label(std::string_view label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t CoefficientPath::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw LabelMismatch("coefficient path has no component '" + std::string(label) + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<double> CoefficientPath::column(std::string_view label) const {
  const std::size_t j = index_of(label);
  std::vector<double> out(grid_.n_points());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = at(n, j);
  return out;
}

double CoefficientPath::value(std::string_view label, double t) const {
  const std::size_t j = index_of(label);
  const double u = std::clamp(t, 0.0, grid_.horizon()) / grid_.dt();
  auto n = static_cast<std::size_t>(u);
  if (n >= grid_.n_steps()) return at(grid_.n_steps(), j);
  const double w = u - static_cast<double>(n);
  return w == 0.0 ? at(n, j) : (1.0 - w) * at(n, j) + w * at(n + 1, j);
}

namespace {

void check_finite(const OdeSystem& system, std::span<const double> y, double t) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i]) || std::abs(y[i]) > blow_up_threshold) throw BlowUp(t, system.labels[i]);
  }
}

class Rk4Stepper {
 public:
  explicit Rk4Stepper(const OdeSystem& system)
      : system_(system), k1_(system.dimension()), k2_(k1_.size()), k3_(k1_.size()), k4_(k1_.size()), tmp_(k1_.size()) {}

  // Advances y from t to t + h (h may be negative).
  void step(double t, double h, std::vector<double>& y) {
    const std::size_t n = y.size();
    system_.rhs(t, y, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
    system_.rhs(t + 0.5 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
    system_.rhs(t + 0.5 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
    system_.rhs(t + h, tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

 private:
  const OdeSystem& system_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

void check_system(const OdeSystem& system) {
  if (system.terminal.size() != system.dimension() || !system.rhs) {
    throw std::invalid_argument("ODE system is incomplete");
  }
}

}  // namespace

CoefficientPath integrate_backward(const OdeSystem& system, const TimeGrid& grid) {
  check_system(system);
  const std::size_t dim = system.dimension();
  const std::size_t steps = grid.n_steps();
  std::vector<double> values(grid.n_points() * dim);
  std::vector<double> y = system.terminal;
  check_finite(system, y, grid.horizon());
  std::copy(y.begin(), y.end(), values.begin() + static_cast<std::ptrdiff_t>(steps * dim));

  Rk4Stepper stepper(system);
  for (std::size_t n = steps; n-- > 0;) {
    stepper.step(grid.t(n + 1), -grid.dt(), y);
    check_finite(system, y, grid.t(n));
    std::copy(y.begin(), y.end(), values.begin() + static_cast<std::ptrdiff_t>(n * dim));
  }
  return CoefficientPath(grid, system.labels, std::move(values));
}

CoefficientPath integrate_forward(const OdeSystem& system, const TimeGrid& grid, std::span<const double> initial) {
  check_system(system);
  const std::size_t dim = system.dimension();
  if (initial.size() != dim) throw std::invalid_argument("initial state has the wrong dimension");
  std::vector<double> values(grid.n_points() * dim);
  std::vector<double> y(initial.begin(), initial.end());
  check_finite(system, y, 0.0);
  std::copy(y.begin(), y.end(), values.begin());

  Rk4Stepper stepper(system);
  for (std::size_t n = 0; n < grid.n_steps(); ++n) {
    stepper.step(grid.t(n), grid.dt(), y);
    check_finite(system, y, grid.t(n + 1));
    std::copy(y.begin(), y.end(), values.begin() + static_cast<std::ptrdiff_t>((n + 1) * dim));
  }
  return CoefficientPath(grid, system.labels, std::move(values));
}

std::vector<std::string> closed_loop_labels() {
  std::vector<std::string> out;
  for (const char* family : {"eta", "phi"}) {
    for (int i = 1; i <= 10; ++i) out.push_back(family + std::to_string(i));
  }
  return out;
}

std::vector<std::string> limiting_labels() {
  std::vector<std::string> out;
  for (const char* family : {"etahat", "phihat"}) {
    for (int i = 1; i <= 6; ++i) out.push_back(family + std::to_string(i));
  }
  return out;
}

std::vector<std::string> open_loop_labels() {
  std::vector<std::string> out;
  for (const char* family : {"etao", "phio"}) {
    for (int i = 1; i <= 4; ++i) out.push_back(family + std::to_string(i));
  }
  return out;
}

std::string mfg_eta_label(std::size_t k) { return "etam_" + std::to_string(k + 1); }
std::string mfg_psi_label(std::size_t k, std::size_t h) {
  return "psim_" + std::to_string(k + 1) + "_" + std::to_string(h + 1);
}
std::string mfg_mu_label(std::size_t k) { return "mum_" + std::to_string(k + 1); }

std::vector<std::string> mfg_labels(std::size_t n_groups) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < n_groups; ++k) out.push_back(mfg_eta_label(k));
  for (std::size_t k = 0; k < n_groups; ++k) {
    for (std::size_t h = 0; h < n_groups; ++h) out.push_back(mfg_psi_label(k, h));
  }
  for (std::size_t k = 0; k < n_groups; ++k) out.push_back(mfg_mu_label(k));
  return out;
}

}  // namespace interbank
