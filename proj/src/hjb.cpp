#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "interbank/analysis.hpp"

namespace interbank {

namespace {

using Vec3 = std::array<double, 3>;

// Quadratic value function 1/2 w'Hw + L'w + const in w = (own gap, mean1, mean2).
struct Quadratic {
  double h[3][3];
  Vec3 lin;
  double constant;

  // Coefficients ordered gap^2, mean1^2, mean2^2, gap*mean1, gap*mean2,
  // mean1*mean2, gap, mean1, mean2, constant.
  static Quadratic from(const double* c) {
    Quadratic v{};
    v.h[0][0] = c[0];
    v.h[1][1] = c[1];
    v.h[2][2] = c[2];
    v.h[0][1] = v.h[1][0] = c[3];
    v.h[0][2] = v.h[2][0] = c[4];
    v.h[1][2] = v.h[2][1] = c[5];
    v.lin = {c[6], c[7], c[8]};
    v.constant = c[9];
    return v;
  }

  double value(const Vec3& w) const {
    double s = constant;
    for (int a = 0; a < 3; ++a) {
      s += lin[a] * w[a];
      for (int b = 0; b < 3; ++b) s += 0.5 * h[a][b] * w[a] * w[b];
    }
    return s;
  }

  Vec3 gradient(const Vec3& w) const {
    Vec3 g = lin;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) g[a] += h[a][b] * w[b];
    }
    return g;
  }

  double bilinear(const Vec3& u, const Vec3& v) const {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) s += u[a] * h[a][b] * v[b];
    }
    return s;
  }
};

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

struct Population {
  std::size_t n1, n2;
  double u1, u2;  // 1/N_1, 1/N_2
  std::size_t size() const { return n1 + n2; }
  std::size_t group(std::size_t l) const { return l < n1 ? 0 : 1; }
};

// d(own gap, mean1, mean2)/dx_l for a player of group `k` at bank `self`.
Vec3 jacobian(const Population& pop, std::size_t k, std::size_t self, std::size_t l) {
  const bool in1 = pop.group(l) == 0;
  const double own = l == self ? 1.0 : 0.0;
  if (k == 0) return in1 ? Vec3{pop.u1 - own, pop.u1, 0.0} : Vec3{0.0, 0.0, pop.u2};
  return in1 ? Vec3{0.0, pop.u1, 0.0} : Vec3{pop.u2 - own, 0.0, pop.u2};
}

Vec3 reduced_state(std::size_t k, double own, double m1, double m2) {
  return {(k == 0 ? m1 : m2) - own, m1, m2};
}

}  // namespace

HjbReport hjb_residual(const CoefficientPath& path, const ValidatedMarket& market, std::size_t samples,
                       std::uint64_t seed, double state_bound) {
  if (market.n_groups() != 2 || !market.has_bank_counts()) {
    throw std::invalid_argument("HJB residual requires a two-group market with bank counts");
  }
  const TimeGrid& grid = path.grid();
  if (grid.n_steps() < 2) throw std::invalid_argument("HJB residual needs interior grid nodes");

  std::array<std::size_t, 20> idx{};
  const auto labels = closed_loop_labels();
  for (std::size_t c = 0; c < 20; ++c) idx[c] = path.index_of(labels[c]);

  Population pop{static_cast<std::size_t>(market.n_banks(0)), static_cast<std::size_t>(market.n_banks(1)), 0.0, 0.0};
  pop.u1 = 1.0 / static_cast<double>(pop.n1);
  pop.u2 = 1.0 / static_cast<double>(pop.n2);
  const std::size_t n = pop.size();
  const double inv_total = 1.0 / static_cast<double>(n);

  const auto strategy = feedback_closed(path, market);

  // Instantaneous covariance of the bank noises.
  const double rho2 = market.rho() * market.rho();
  std::vector<double> cov(n * n);
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t m = 0; m < n; ++m) {
      const auto& gl = market.group(pop.group(l));
      const auto& gm = market.group(pop.group(m));
      double corr = rho2;
      if (pop.group(l) == pop.group(m)) corr += (1.0 - rho2) * gl.rho_k * gl.rho_k;
      if (l == m) corr += (1.0 - rho2) * (1.0 - gl.rho_k * gl.rho_k);
      cov[l * n + m] = gl.sigma * gm.sigma * corr;
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_node(1, grid.n_steps() - 1);
  std::uniform_real_distribution<double> pick_state(-state_bound, state_bound);

  HjbReport report{0.0, 0.0, 0.0, samples};
  std::vector<double> x(n), alpha(n), gap(n);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t node = pick_node(rng);
    const double t = grid.t(node);
    for (auto& xi : x) xi = pick_state(rng);

    double m1 = 0.0, m2 = 0.0;
    for (std::size_t l = 0; l < pop.n1; ++l) m1 += x[l];
    for (std::size_t l = pop.n1; l < n; ++l) m2 += x[l];
    m1 *= pop.u1;
    m2 *= pop.u2;
    const double global = (m1 * static_cast<double>(pop.n1) + m2 * static_cast<double>(pop.n2)) * inv_total;
    double x_sup2 = 0.0;
    for (double xi : x) x_sup2 = std::max(x_sup2, xi * xi);

    double now[20], dnow[20];
    for (std::size_t c = 0; c < 20; ++c) {
      now[c] = path.at(node, idx[c]);
      dnow[c] = (path.at(node + 1, idx[c]) - path.at(node - 1, idx[c])) / (grid.t(node + 1) - grid.t(node - 1));
    }
    const Quadratic value[2] = {Quadratic::from(now), Quadratic::from(now + 10)};
    const Quadratic rate[2] = {Quadratic::from(dnow), Quadratic::from(dnow + 10)};

    // Every bank plays its first-order-condition control.
    const double averages[2] = {m1, m2};
    for (std::size_t l = 0; l < n; ++l) {
      const std::size_t k = pop.group(l);
      const auto& g = market.group(k);
      const double target = (1.0 - g.lambda) * averages[k] + g.lambda * global;
      gap[l] = target - x[l];
      const Vec3 w = reduced_state(k, x[l], m1, m2);
      const double own_slope = dot(jacobian(pop, k, l, l), value[k].gradient(w));
      alpha[l] = g.q * gap[l] - own_slope;
      const double played = evaluate_control(strategy, t, k, x[l], averages);
      report.max_control_gap = std::max(report.max_control_gap, std::abs(played - alpha[l]));
    }

    for (std::size_t k = 0; k < 2; ++k) {
      const std::size_t self = k == 0 ? 0 : pop.n1;
      const auto& g = market.group(k);
      const Vec3 w = reduced_state(k, x[self], m1, m2);
      const Vec3 grad = value[k].gradient(w);
      std::vector<Vec3> jac(n);
      for (std::size_t l = 0; l < n; ++l) jac[l] = jacobian(pop, k, self, l);

      double residual = rate[k].value(w);
      for (std::size_t l = 0; l < n; ++l) {
        const double growth = market.group(pop.group(l)).gamma(t);
        residual += (alpha[l] + growth) * dot(jac[l], grad);
      }
      for (std::size_t l = 0; l < n; ++l) {
        for (std::size_t m = 0; m < n; ++m) residual += 0.5 * cov[l * n + m] * value[k].bilinear(jac[l], jac[m]);
      }
      const double a = alpha[self], u = gap[self];
      residual += 0.5 * a * a - g.q * a * u + 0.5 * g.eps * u * u;

      report.max_residual = std::max(report.max_residual, std::abs(residual));
      report.max_scaled_residual = std::max(report.max_scaled_residual, std::abs(residual) / (1.0 + x_sup2));
    }
  }
  return report;
}

}  // namespace interbank
