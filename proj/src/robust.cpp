#include "ciradar/robust.hpp"

#include <cmath>

namespace ciradar {

double worst_case_gamma(double gamma, const CVector& f_hat, double delta_f, double sigma_c2,
                        double radar_power) {
  if (delta_f < 0.0) throw std::invalid_argument("worst_case_gamma: delta_f must be non-negative");
  const double norm = f_hat.norm();
  return gamma * (sigma_c2 + radar_power * (f_hat.squaredNorm() + 2.0 * delta_f * norm + delta_f * delta_f));
}

QuadraticConstraint robust_inr_constraint(const Vector& g_bar, double delta_g, double inr_cap,
                                          double sigma_r2) {
  if (delta_g < 0.0) throw std::invalid_argument("robust_inr_constraint: delta_g must be non-negative");
  const auto dim = g_bar.size();
  const auto n = dim / 2;
  Matrix beta(dim, 2);
  beta.col(0) = g_bar;
  beta.col(1) << g_bar.tail(n), -g_bar.head(n);
  QuadraticConstraint q{beta * beta.transpose(), Vector::Zero(dim), inr_cap * sigma_r2};
  if (delta_g > 0.0)
    q.Q.diagonal().array() += 2.0 * delta_g * delta_g + 4.0 * delta_g * g_bar.norm();
  return q;
}

std::pair<LinearConstraint, LinearConstraint> robust_sinr_linear(const Vector& h_bar, const Matrix& pi,
                                                                 double gamma, double psi) {
  const double t = std::tan(psi);
  const Vector b = pi.transpose() * h_bar;
  const double offset = std::sqrt(gamma) * t;
  return {LinearConstraint{-(h_bar * t - b), -offset}, LinearConstraint{-(h_bar * t + b), -offset}};
}

std::pair<ConeConstraint, ConeConstraint> robust_sinr_constraints(const Vector& h_bar, const Matrix& pi,
                                                                  double delta_h, double gamma,
                                                                  double psi) {
  if (delta_h < 0.0) throw std::invalid_argument("robust_sinr_constraints: delta_h must be non-negative");
  const double t = std::tan(psi);
  const Vector b = pi.transpose() * h_bar;
  const auto dim = h_bar.size();
  const Matrix eye = Matrix::Identity(dim, dim);
  const double offset = std::sqrt(gamma) * t;
  // w1 - tan(psi) w2 = (Pi - tan(psi) I) w2 for the "+" row and
  // -(w1 + tan(psi) w2) for the "-" row; the sign is irrelevant under the norm.
  ConeConstraint plus{delta_h * (pi - t * eye), Vector::Zero(dim), h_bar * t - b, -offset};
  ConeConstraint minus{delta_h * (pi + t * eye), Vector::Zero(dim), h_bar * t + b, -offset};
  return {plus, minus};
}

RobustCiProblem build_robust_problem(const ChannelSet& cs, const Vector& phases, int order,
                                     const LinkBudget& budget, double delta_h, double delta_g,
                                     double delta_f) {
  if (delta_h < 0.0 || delta_g < 0.0 || delta_f < 0.0)
    throw std::invalid_argument("build_robust_problem: error bounds must be non-negative");
  const ChannelSet est = cs.design_view();
  RobustCiProblem rp;
  rp.nominal = build_problem(est, phases, order, budget);
  const int k = est.users();
  const int m = est.radar_antennas();
  rp.targets = budget.sinr_linear(k);
  rp.sigma_c2 = budget.sigma_c2;
  rp.radar_power = budget.radar_power;
  rp.delta_h = delta_h;
  rp.delta_g = delta_g;
  rp.delta_f = delta_f;
  rp.f_norms.resize(k);
  rp.inflated_gamma.resize(k);
  for (int i = 0; i < k; ++i) {
    rp.f_norms(i) = est.F.col(i).norm();
    rp.inflated_gamma(i) =
        worst_case_gamma(rp.targets(i), est.F.col(i), delta_f, budget.sigma_c2, budget.radar_power);
  }
  rp.inr_inflation.resize(m);
  for (int j = 0; j < m; ++j) {
    const double g_norm = rp.nominal.beta[static_cast<std::size_t>(j)].col(0).norm();
    rp.inr_inflation(j) = 2.0 * delta_g * delta_g + 4.0 * delta_g * g_norm;
  }
  return rp;
}

QcqpSpec robust_spec(const RobustCiProblem& rp) {
  const CiProblem& p = rp.nominal;
  const int dim = 2 * p.n();
  QcqpSpec spec;
  spec.n = dim;
  spec.Q0 = Matrix::Identity(dim, dim);
  spec.q0 = Vector::Zero(dim);
  const int k = p.k();
  std::vector<LinearConstraint> plus_rows, minus_rows;
  std::vector<ConeConstraint> plus_cones, minus_cones;
  for (int i = 0; i < k; ++i) {
    if (rp.delta_h == 0.0) {
      auto [plus, minus] = robust_sinr_linear(p.h_bar.col(i), p.pi, rp.inflated_gamma(i), p.psi);
      plus_rows.push_back(std::move(plus));
      minus_rows.push_back(std::move(minus));
    } else {
      auto [plus, minus] =
          robust_sinr_constraints(p.h_bar.col(i), p.pi, rp.delta_h, rp.inflated_gamma(i), p.psi);
      plus_cones.push_back(std::move(plus));
      minus_cones.push_back(std::move(minus));
    }
  }
  // Same row order as the nominal problem: all "+" rows, then all "-" rows.
  for (auto& r : plus_rows) spec.linear.push_back(std::move(r));
  for (auto& r : minus_rows) spec.linear.push_back(std::move(r));
  for (auto& c : plus_cones) spec.cones.push_back(std::move(c));
  for (auto& c : minus_cones) spec.cones.push_back(std::move(c));
  for (int j = 0; j < p.m(); ++j)
    spec.quadratic.push_back(robust_inr_constraint(p.beta[static_cast<std::size_t>(j)].col(0), rp.delta_g,
                                                   p.inr_caps(j), p.sigma_r2));
  return spec;
}

EngineResult solve_robust(const RobustCiProblem& rp, const QcqpOptions& opts) {
  EngineResult out;
  out.qcqp = solve_qcqp(robust_spec(rp), opts);
  out.solution = make_solution(rp.nominal, out.qcqp.x);
  return out;
}

}  // namespace ciradar
