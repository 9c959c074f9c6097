#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "interbank/model.hpp"

namespace interbank {

/// Requested coefficient label is absent from a path.
class LabelMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A coefficient left the representable range during backward integration.
class BlowUp : public std::runtime_error {
 public:
  BlowUp(double time, std::string component);
  double time() const { return time_; }
  const std::string& component() const { return component_; }

 private:
  double time_;
  std::string component_;
};

/// dy/dt = f(t, y) with terminal data y(T).
struct OdeSystem {
  using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

  std::vector<std::string> labels;
  std::vector<double> terminal;
  Rhs rhs;

  std::size_t dimension() const { return labels.size(); }
};

/// Coefficient values on every node of a time grid, row-major by node.
class CoefficientPath {
 public:
  CoefficientPath(TimeGrid grid, std::vector<std::string> labels, std::vector<double> values);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t dimension() const { return labels_.size(); }

  bool has_label(std::string_view label) const;
  /// Throws LabelMismatch when absent.
  std::size_t index_of(std::string_view label) const;

  double at(std::size_t node, std::size_t component) const { return values_[node * labels_.size() + component]; }
  double at(std::size_t node, std::string_view label) const { return at(node, index_of(label)); }
  std::span<const double> row(std::size_t node) const {
    return {values_.data() + node * labels_.size(), labels_.size()};
  }
  std::vector<double> column(std::string_view label) const;
  /// Linear interpolation in time; t is clamped to [0, T].
  double value(std::string_view label, double t) const;

  const std::vector<double>& raw() const { return values_; }

 private:
  TimeGrid grid_;
  std::vector<std::string> labels_;
  std::vector<double> values_;
};

/// Guard threshold for BlowUp.
inline constexpr double blow_up_threshold = 1e12;

/// Classic RK4 from t = T down to 0 on the given grid; the terminal row is stored verbatim.
CoefficientPath integrate_backward(const OdeSystem& system, const TimeGrid& grid);

/// Classic RK4 from t = 0 up to T starting at `initial`.
CoefficientPath integrate_forward(const OdeSystem& system, const TimeGrid& grid, std::span<const double> initial);

/// Terminal cost weight of group k on each group average: lambda_k (beta_h - delta_kh).
std::vector<double> terminal_average_weights(const ValidatedMarket& market, std::size_t k);

/// Two-group finite closed-loop system: eta1..eta10, phi1..phi10.
OdeSystem closed_loop_system(const ValidatedMarket& market);
/// Two-group large-population closed-loop system: etahat1..6, phihat1..6.
OdeSystem limiting_system(const ValidatedMarket& market);
/// Two-group open-loop system: etao1..4, phio1..4.
OdeSystem open_loop_system(const ValidatedMarket& market);
/// Mean-field system for d groups: etam_k, psim_k_h, mum_k (1-based indices).
OdeSystem mfg_system(const ValidatedMarket& market);

std::vector<std::string> closed_loop_labels();
std::vector<std::string> limiting_labels();
std::vector<std::string> open_loop_labels();
std::vector<std::string> mfg_labels(std::size_t n_groups);

std::string mfg_eta_label(std::size_t k);
std::string mfg_psi_label(std::size_t k, std::size_t h);
std::string mfg_mu_label(std::size_t k);

}  // namespace interbank
