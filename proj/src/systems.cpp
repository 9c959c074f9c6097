#include <cmath>

#include "interbank/riccati.hpp"

namespace interbank {

std::vector<double> terminal_average_weights(const ValidatedMarket& market, std::size_t k) {
  std::vector<double> w(market.n_groups());
  for (std::size_t h = 0; h < w.size(); ++h) {
    w[h] = market.group(k).lambda * (market.beta(h) - (h == k ? 1.0 : 0.0));
  }
  return w;
}

namespace {

void require_two_groups(const ValidatedMarket& market, bool need_counts, const char* what) {
  if (market.n_groups() != 2) throw RejectedParams(std::string(what) + " system requires exactly two groups");
  if (need_counts && !market.has_bank_counts()) {
    throw RejectedParams(std::string(what) + " system requires bank counts");
  }
}

// Parameters of the two-group quadratic systems.  For group k the tracking
// error is (own gap) + w[k][0]*mean1 + w[k][1]*mean2.
struct TwoGroup {
  double q[2];
  double excess[2];  // eps - q^2
  double w[2][2];
  double inv_n[2];
  double c[2];
  double sigma[2];
  double rho;
  double rho_k[2];
  StepFunction gamma[2];

  TwoGroup(const ValidatedMarket& m, bool finite) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& g = m.group(k);
      q[k] = g.q;
      excess[k] = g.eps - g.q * g.q;
      const auto wk = terminal_average_weights(m, k);
      w[k][0] = wk[0];
      w[k][1] = wk[1];
      inv_n[k] = finite ? 1.0 / static_cast<double>(m.n_banks(k)) : 0.0;
      c[k] = g.c;
      sigma[k] = g.sigma;
      rho_k[k] = g.rho_k;
      gamma[k] = g.gamma;
    }
    rho = m.rho();
  }

  // Quadratic terminal data for one family, ordered own-gap^2, mean1^2,
  // mean2^2, gap*mean1, gap*mean2, mean1*mean2.
  void quadratic_terminal(std::size_t k, double* out) const {
    out[0] = c[k];
    out[1] = c[k] * w[k][0] * w[k][0];
    out[2] = c[k] * w[k][1] * w[k][1];
    out[3] = c[k] * w[k][0];
    out[4] = c[k] * w[k][1];
    out[5] = c[k] * w[k][0] * w[k][1];
  }
};

// Own-control sensitivities of the value function and the resulting drift
// factors of the reduced state (own gap, mean1, mean2).
struct Sensitivities {
  double pg, p1, p2;  // group 1: d/dx_i of gap, mean1, mean2 terms
  double qg, q1, q2;  // group 2
  double a1, b1, c1;  // group-1 gap decay, mean1 drift on mean1, mean1 drift on mean2 (negated)
  double a2, b2, c2;  // group-2 gap decay, mean2 drift on mean1, mean2 drift on mean2 (negated)
};

Sensitivities sensitivities(const TwoGroup& p, const double* eta, const double* phi) {
  Sensitivities s{};
  const double u1 = p.inv_n[0];
  const double u2 = p.inv_n[1];
  s.pg = (u1 - 1.0) * eta[0] + u1 * eta[3];
  s.p1 = (u1 - 1.0) * eta[3] + u1 * eta[1];
  s.p2 = (u1 - 1.0) * eta[4] + u1 * eta[5];
  s.qg = (u2 - 1.0) * phi[0] + u2 * phi[4];
  s.q1 = (u2 - 1.0) * phi[3] + u2 * phi[5];
  s.q2 = (u2 - 1.0) * phi[4] + u2 * phi[2];
  s.a1 = p.q[0] - s.pg;
  s.b1 = s.p1 - p.q[0] * p.w[0][0];
  s.c1 = s.p2 - p.q[0] * p.w[0][1];
  s.a2 = p.q[1] - s.qg;
  s.b2 = s.q1 - p.q[1] * p.w[1][0];
  s.c2 = s.q2 - p.q[1] * p.w[1][1];
  return s;
}

// Derivatives of the six quadratic components of both families.
void quadratic_rhs(const TwoGroup& p, const Sensitivities& s, const double* eta, const double* phi, double* deta,
                   double* dphi) {
  const double a = p.w[0][0], b = p.w[0][1];
  const double ap = p.w[1][0], bp = p.w[1][1];
  const double e1 = p.excess[0], e2 = p.excess[1];

  deta[0] = 2.0 * s.a1 * eta[0] - s.pg * s.pg - e1;
  deta[1] = 2.0 * s.b1 * eta[1] + 2.0 * s.b2 * eta[5] - s.p1 * s.p1 - e1 * a * a;
  deta[2] = 2.0 * s.c2 * eta[2] + 2.0 * s.c1 * eta[5] - s.p2 * s.p2 - e1 * b * b;
  deta[3] = (s.a1 + s.b1) * eta[3] + s.b2 * eta[4] - s.pg * s.p1 - e1 * a;
  deta[4] = (s.a1 + s.c2) * eta[4] + s.c1 * eta[3] - s.pg * s.p2 - e1 * b;
  deta[5] = (s.b1 + s.c2) * eta[5] + s.c1 * eta[1] + s.b2 * eta[2] - s.p1 * s.p2 - e1 * a * b;

  dphi[0] = 2.0 * s.a2 * phi[0] - s.qg * s.qg - e2;
  dphi[1] = 2.0 * s.b1 * phi[1] + 2.0 * s.b2 * phi[5] - s.q1 * s.q1 - e2 * ap * ap;
  dphi[2] = 2.0 * s.c2 * phi[2] + 2.0 * s.c1 * phi[5] - s.q2 * s.q2 - e2 * bp * bp;
  dphi[3] = (s.a2 + s.b1) * phi[3] + s.b2 * phi[4] - s.qg * s.q1 - e2 * ap;
  dphi[4] = (s.a2 + s.c2) * phi[4] + s.c1 * phi[3] - s.qg * s.q2 - e2 * bp;
  dphi[5] = (s.b1 + s.c2) * phi[5] + s.c1 * phi[1] + s.b2 * phi[2] - s.q1 * s.q2 - e2 * ap * bp;
}

}  // namespace

OdeSystem closed_loop_system(const ValidatedMarket& market) {
  require_two_groups(market, true, "closed-loop");
  const TwoGroup p(market, true);

  OdeSystem sys;
  sys.labels = closed_loop_labels();
  sys.terminal.assign(20, 0.0);
  p.quadratic_terminal(0, sys.terminal.data());
  p.quadratic_terminal(1, sys.terminal.data() + 10);

  // Instantaneous variances of the reduced state seen by each family.
  const double s2 = 1.0 - p.rho * p.rho;
  const double idio1 = s2 * (1.0 - p.rho_k[0] * p.rho_k[0]);
  const double idio2 = s2 * (1.0 - p.rho_k[1] * p.rho_k[1]);
  const double var_m1 = p.sigma[0] * p.sigma[0] * (p.rho * p.rho + s2 * p.rho_k[0] * p.rho_k[0] + idio1 * p.inv_n[0]);
  const double var_m2 = p.sigma[1] * p.sigma[1] * (p.rho * p.rho + s2 * p.rho_k[1] * p.rho_k[1] + idio2 * p.inv_n[1]);
  const double cov_m = p.sigma[0] * p.sigma[1] * p.rho * p.rho;
  const double var_g1 = p.sigma[0] * p.sigma[0] * idio1 * (1.0 - p.inv_n[0]);
  const double var_g2 = p.sigma[1] * p.sigma[1] * idio2 * (1.0 - p.inv_n[1]);

  sys.rhs = [p, var_m1, var_m2, cov_m, var_g1, var_g2](double t, std::span<const double> y, std::span<double> dy) {
    const double* eta = y.data();
    const double* phi = y.data() + 10;
    double* deta = dy.data();
    double* dphi = dy.data() + 10;
    const Sensitivities s = sensitivities(p, eta, phi);
    quadratic_rhs(p, s, eta, phi, deta, dphi);

    const double u1 = p.inv_n[0], u2 = p.inv_n[1];
    const double p0 = (u1 - 1.0) * eta[6] + u1 * eta[7];
    const double q0 = (u2 - 1.0) * phi[6] + u2 * phi[8];
    const double d1 = p0 - p.gamma[0](t);
    const double d2 = q0 - p.gamma[1](t);

    deta[6] = s.a1 * eta[6] + d1 * eta[3] + d2 * eta[4] - s.pg * p0;
    deta[7] = s.b1 * eta[7] + d1 * eta[1] + s.b2 * eta[8] + d2 * eta[5] - s.p1 * p0;
    deta[8] = s.c2 * eta[8] + d1 * eta[5] + s.c1 * eta[7] + d2 * eta[2] - s.p2 * p0;
    deta[9] = d1 * eta[7] + d2 * eta[8] -
              (0.5 * var_g1 * eta[0] + 0.5 * var_m1 * eta[1] + 0.5 * var_m2 * eta[2] + cov_m * eta[5]) -
              0.5 * p0 * p0;

    dphi[6] = s.a2 * phi[6] + d1 * phi[3] + d2 * phi[4] - s.qg * q0;
    dphi[7] = s.b1 * phi[7] + d1 * phi[1] + s.b2 * phi[8] + d2 * phi[5] - s.q1 * q0;
    dphi[8] = s.c2 * phi[8] + d1 * phi[5] + s.c1 * phi[7] + d2 * phi[2] - s.q2 * q0;
    dphi[9] = d1 * phi[7] + d2 * phi[8] -
              (0.5 * var_g2 * phi[0] + 0.5 * var_m1 * phi[1] + 0.5 * var_m2 * phi[2] + cov_m * phi[5]) -
              0.5 * q0 * q0;
  };
  return sys;
}

OdeSystem limiting_system(const ValidatedMarket& market) {
  require_two_groups(market, false, "limiting");
  const TwoGroup p(market, false);

  OdeSystem sys;
  sys.labels = limiting_labels();
  sys.terminal.assign(12, 0.0);
  p.quadratic_terminal(0, sys.terminal.data());
  p.quadratic_terminal(1, sys.terminal.data() + 6);
  sys.rhs = [p](double, std::span<const double> y, std::span<double> dy) {
    const Sensitivities s = sensitivities(p, y.data(), y.data() + 6);
    quadratic_rhs(p, s, y.data(), y.data() + 6, dy.data(), dy.data() + 6);
  };
  return sys;
}

OdeSystem open_loop_system(const ValidatedMarket& market) {
  require_two_groups(market, true, "open-loop");
  const TwoGroup p(market, true);
  const double k1 = 1.0 - market.inv_effective_size(0);
  const double k2 = 1.0 - market.inv_effective_size(1);

  OdeSystem sys;
  sys.labels = open_loop_labels();
  sys.terminal = {p.c[0], p.c[0] * p.w[0][0], p.c[0] * p.w[0][1], 0.0,
                  p.c[1], p.c[1] * p.w[1][0], p.c[1] * p.w[1][1], 0.0};
  sys.rhs = [p, k1, k2](double t, std::span<const double> y, std::span<double> dy) {
    const double* eta = y.data();
    const double* phi = y.data() + 4;
    double* deta = dy.data();
    double* dphi = dy.data() + 4;
    const double q1 = p.q[0], q2 = p.q[1];
    // Equilibrium feedback weights on the two group means and the intercepts.
    const double w11 = q1 * p.w[0][0] + k1 * eta[1];
    const double w12 = q1 * p.w[0][1] + k1 * eta[2];
    const double w21 = q2 * p.w[1][0] + k2 * phi[1];
    const double w22 = q2 * p.w[1][1] + k2 * phi[2];
    const double drift1 = k1 * eta[3] + p.gamma[0](t);
    const double drift2 = k2 * phi[3] + p.gamma[1](t);

    deta[0] = (1.0 + k1) * q1 * eta[0] + k1 * eta[0] * eta[0] - p.excess[0];
    deta[1] = q1 * k1 * eta[1] - w11 * eta[1] - w21 * eta[2] - p.excess[0] * p.w[0][0];
    deta[2] = q1 * k1 * eta[2] - w12 * eta[1] - w22 * eta[2] - p.excess[0] * p.w[0][1];
    deta[3] = q1 * k1 * eta[3] - drift1 * eta[1] - drift2 * eta[2];

    dphi[0] = (1.0 + k2) * q2 * phi[0] + k2 * phi[0] * phi[0] - p.excess[1];
    dphi[1] = q2 * k2 * phi[1] - w11 * phi[1] - w21 * phi[2] - p.excess[1] * p.w[1][0];
    dphi[2] = q2 * k2 * phi[2] - w12 * phi[1] - w22 * phi[2] - p.excess[1] * p.w[1][1];
    dphi[3] = q2 * k2 * phi[3] - drift1 * phi[1] - drift2 * phi[2];
  };
  return sys;
}

OdeSystem mfg_system(const ValidatedMarket& market) {
  const std::size_t d = market.n_groups();
  struct Group {
    double q, excess, c, lambda;
    StepFunction gamma;
  };
  std::vector<Group> groups;
  for (std::size_t k = 0; k < d; ++k) {
    const auto& g = market.group(k);
    groups.push_back({g.q, g.eps - g.q * g.q, g.c, g.lambda, g.gamma});
  }
  // shift[k*d+h] = q_k lambda_k (beta_h - delta_kh), the part of the mean weight
  // that does not come from the value function.
  std::vector<double> weight(d * d);
  std::vector<double> shift(d * d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto wk = terminal_average_weights(market, k);
    for (std::size_t h = 0; h < d; ++h) {
      weight[k * d + h] = wk[h];
      shift[k * d + h] = groups[k].q * wk[h];
    }
  }

  OdeSystem sys;
  sys.labels = mfg_labels(d);
  sys.terminal.assign(d + d * d + d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    sys.terminal[k] = groups[k].c;
    for (std::size_t h = 0; h < d; ++h) sys.terminal[d + k * d + h] = groups[k].c * weight[k * d + h];
  }

  sys.rhs = [d, groups, weight, shift](double t, std::span<const double> y, std::span<double> dy) {
    const double* eta = y.data();
    const double* psi = y.data() + d;
    const double* mu = y.data() + d + d * d;
    double* deta = dy.data();
    double* dpsi = dy.data() + d;
    double* dmu = dy.data() + d + d * d;
    for (std::size_t k = 0; k < d; ++k) {
      const auto& g = groups[k];
      deta[k] = 2.0 * g.q * eta[k] + eta[k] * eta[k] - g.excess;
      for (std::size_t h = 0; h < d; ++h) {
        double acc = g.q * psi[k * d + h] - g.excess * weight[k * d + h];
        for (std::size_t l = 0; l < d; ++l) acc -= psi[k * d + l] * (shift[l * d + h] + psi[l * d + h]);
        dpsi[k * d + h] = acc;
      }
      double acc = g.q * mu[k];
      for (std::size_t l = 0; l < d; ++l) acc -= psi[k * d + l] * (mu[l] + groups[l].gamma(t));
      dmu[k] = acc;
    }
  };
  return sys;
}

}  // namespace interbank
