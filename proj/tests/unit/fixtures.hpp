#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "interbank/model.hpp"
#include "json.hpp"

namespace fixtures {

using namespace interbank;

inline GroupParams group(double q, double eps, double c, double lambda) {
  GroupParams g;
  g.q = q;
  g.eps = eps;
  g.c = c;
  g.lambda = lambda;
  return g;
}

/// Two-group liquidity-figure market: N1 = 2, N2 = 8, T = 1.
inline MarketParams figure_market() {
  MarketParams p;
  p.horizon = 1.0;
  p.groups = {group(2.0, 5.0, 0.0, 0.1), group(2.0, 4.5, 0.0, 0.5)};
  p.groups[0].n_banks = 2;
  p.groups[1].n_banks = 8;
  return p;
}

/// Same groups with proportions (0.2, 0.8) instead of counts.
inline MarketParams figure_market_limit() {
  MarketParams p = figure_market();
  p.groups[0].n_banks.reset();
  p.groups[1].n_banks.reset();
  p.groups[0].beta = 0.2;
  p.groups[1].beta = 0.8;
  return p;
}

/// Figure market with growth, unequal volatilities and correlated noise.
inline MarketParams general_market() {
  MarketParams p = figure_market();
  p.rho = 0.4;
  p.groups[0].c = 0.7;
  p.groups[1].c = 1.3;
  p.groups[0].gamma = StepFunction(0.3);
  p.groups[1].gamma = StepFunction(0.1);
  p.groups[0].sigma = 0.8;
  p.groups[1].sigma = 1.2;
  p.groups[0].rho_k = 0.3;
  p.groups[1].rho_k = 0.6;
  return p;
}

/// Three-group mean-field market with T = 2.
inline MarketParams three_group_market() {
  MarketParams p;
  p.horizon = 2.0;
  const double q[3] = {1.5, 2.0, 0.8}, eps[3] = {3.0, 4.5, 1.0}, c[3] = {0.9, 0.4, 1.1};
  const double lam[3] = {0.3, 0.5, 0.2}, beta[3] = {0.5, 0.3, 0.2}, gamma[3] = {0.2, 0.0, 0.1};
  for (int k = 0; k < 3; ++k) {
    auto g = group(q[k], eps[k], c[k], lam[k]);
    g.beta = beta[k];
    g.gamma = StepFunction(gamma[k]);
    p.groups.push_back(g);
  }
  return p;
}

inline const nlohmann::json& oracle() {
  static const nlohmann::json data = [] {
    std::ifstream in(INTERBANK_ORACLE_PATH);
    return nlohmann::json::parse(in);
  }();
  return data;
}

/// Solution at time-to-go s of y' = kappa y^2 + 2 q y - e with y(T) = c.
inline double scalar_riccati(double kappa, double q, double e, double c, double s) {
  const double root = std::sqrt(q * q + kappa * e);
  const double up = (-q + root) / kappa;
  const double down = (-q - root) / kappa;
  const double ratio = (c - up) / (c - down) * std::exp(-2.0 * root * s);
  return (up - ratio * down) / (1.0 - ratio);
}

/// Numeric rows of CSV text, header skipped.
inline std::vector<std::vector<double>> parse_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fixtures
