#include "ciradar/ci_engine.hpp"

#include <cmath>

namespace ciradar {

namespace {
void add_ci_rows(const CiProblem& p, QcqpSpec& spec) {
  const Vector offset = p.ci_offset();
  for (Eigen::Index j = 0; j < p.A.cols(); ++j) spec.linear.push_back({-p.A.col(j), -offset(j)});
}
}  // namespace

QcqpSpec power_min_spec(const CiProblem& p) {
  const int dim = 2 * p.n();
  QcqpSpec spec;
  spec.n = dim;
  spec.Q0 = Matrix::Identity(dim, dim);
  spec.q0 = Vector::Zero(dim);
  add_ci_rows(p, spec);
  for (int m = 0; m < p.m(); ++m) {
    const Matrix& bm = p.beta[static_cast<std::size_t>(m)];
    spec.quadratic.push_back({bm * bm.transpose(), Vector::Zero(dim), p.inr_caps(m) * p.sigma_r2});
  }
  return spec;
}

EngineResult power_min_qcqp(const CiProblem& p, const QcqpOptions& opts) {
  EngineResult out;
  out.qcqp = solve_qcqp(power_min_spec(p), opts);
  out.solution = make_solution(p, out.qcqp.x);
  return out;
}

QcqpSpec interf_min_spec(const CiProblem& p, double budget_mw) {
  if (!(budget_mw > 0.0)) throw std::invalid_argument("solve_interf_min: power budget must be positive");
  const int dim = 2 * p.n();
  QcqpSpec spec;
  spec.n = dim;
  spec.Q0 = p.interference_gram();
  if (spec.Q0.cwiseAbs().maxCoeff() == 0.0) spec.Q0 = Matrix::Identity(dim, dim);
  spec.q0 = Vector::Zero(dim);
  add_ci_rows(p, spec);
  spec.quadratic.push_back({Matrix::Identity(dim, dim), Vector::Zero(dim), budget_mw});
  return spec;
}

EngineResult solve_interf_min(const CiProblem& p, double budget_mw, const QcqpOptions& opts) {
  EngineResult out;
  out.qcqp = solve_qcqp(interf_min_spec(p, budget_mw), opts);
  out.solution = make_solution(p, out.qcqp.x);
  // Report the interference itself, not the tie-break objective.
  out.qcqp.objective = out.solution.interference;
  return out;
}

LinkReport evaluate(const ChannelSet& cs, const Vector& phases, int order, const LinkBudget& budget,
                    const BeamformingSolution& solution) {
  cs.validate();
  const int k = cs.users();
  const int m = cs.radar_antennas();
  if (phases.size() != k || solution.precoders.cols() != k || solution.w.size() != cs.bs_antennas())
    throw std::invalid_argument("evaluate: dimensions of channels, slot and solution disagree");
  LinkReport r;
  r.sinr.resize(k);
  r.ci_margin.resize(k);
  const Vector targets = budget.sinr_linear(k);
  const double tan_psi = std::tan(kPi / order);
  const CMatrix& T = solution.precoders;
  const CMatrix gains = cs.H.transpose() * T;  // (i, k) = h_i^T t_k
  CVector x = CVector::Zero(cs.bs_antennas());
  for (int i = 0; i < k; ++i) x += T.col(i) * std::polar(1.0, phases(i));
  for (int i = 0; i < k; ++i) {
    const double noise = budget.radar_power * cs.F.col(i).squaredNorm() + budget.sigma_c2;
    double leak = 0.0;
    for (int j = 0; j < k; ++j)
      if (j != i) leak += std::norm(gains(i, j));
    r.sinr(i) = std::norm(gains(i, i)) / (leak + noise);
    // Received noiseless point rotated back onto the symbol direction.
    const Complex rx = (cs.H.col(i).transpose() * x).value() * std::polar(1.0, -phases(i));
    r.ci_margin(i) = (rx.real() - std::sqrt(targets(i) * noise)) * tan_psi - std::abs(rx.imag());
  }
  r.inr.resize(m);
  const CVector u = cs.G.transpose() * x;
  for (int j = 0; j < m; ++j) r.inr(j) = std::norm(u(j)) / budget.sigma_r2;
  r.power = (x * std::polar(1.0, -phases(0))).squaredNorm();
  r.precoder_power = T.squaredNorm();
  return r;
}

}  // namespace ciradar
