#include "ciradar/ci_core.hpp"

#include <cmath>

namespace ciradar {

namespace {
Vector broadcast_db(const std::vector<double>& db, int count, const char* what) {
  if (db.empty()) throw std::invalid_argument(std::string(what) + ": no values given");
  if (db.size() != 1 && static_cast<int>(db.size()) != count)
    throw std::invalid_argument(std::string(what) + ": expected 1 or " + std::to_string(count) +
                                " values, got " + std::to_string(db.size()));
  Vector out(count);
  for (int i = 0; i < count; ++i) out(i) = db_to_linear(db.size() == 1 ? db[0] : db[static_cast<std::size_t>(i)]);
  return out;
}
}  // namespace

Vector LinkBudget::sinr_linear(int k) const { return broadcast_db(sinr_db, k, "sinr_db"); }
Vector LinkBudget::inr_linear(int m) const {
  if (m == 0) return Vector();
  return broadcast_db(inr_db, m, "inr_db");
}

RotatedChannels rotate_channels(const ChannelSet& cs, const Vector& phases, int order,
                                const LinkBudget& budget) {
  cs.validate();
  const int k = cs.users();
  const int m = cs.radar_antennas();
  if (phases.size() != k)
    throw std::invalid_argument("rotate_channels: slot has " + std::to_string(phases.size()) +
                                " phases for " + std::to_string(k) + " users");
  // psi = pi/2 turns the cone into a half-plane and tan(psi) is not finite
  if (order < 3) throw std::invalid_argument("rotate_channels: CI cones need modulation order >= 3");
  RotatedChannels rc;
  rc.H.resize(cs.H.rows(), k);
  for (int i = 0; i < k; ++i) rc.H.col(i) = cs.H.col(i) * std::polar(1.0, phases(0) - phases(i));
  rc.G = cs.G * std::polar(1.0, phases(0));
  const Vector targets = budget.sinr_linear(k);
  rc.gamma.resize(k);
  for (int i = 0; i < k; ++i)
    rc.gamma(i) = targets(i) * (budget.sigma_c2 + budget.radar_power * cs.F.col(i).squaredNorm());
  rc.inr_caps = budget.inr_linear(m);
  rc.phases = phases;
  rc.sigma_r2 = budget.sigma_r2;
  rc.psi = kPi / order;
  return rc;
}

Vector to_w2(const CVector& w) {
  Vector w2(2 * w.size());
  w2 << w.real(), -w.imag();
  return w2;
}

CVector from_w2(const Vector& w2) {
  const auto n = w2.size() / 2;
  CVector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = Complex(w2(i), -w2(n + i));
  return w;
}

CiProblem realify(const RotatedChannels& rc) {
  const auto n = rc.H.rows();
  const auto k = rc.H.cols();
  CiProblem p;
  p.h_bar.resize(2 * n, k);
  p.h_bar << rc.H.real(), rc.H.imag();
  p.pi = Matrix::Zero(2 * n, 2 * n);
  p.pi.topRightCorner(n, n) = -Matrix::Identity(n, n);
  p.pi.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
  p.b = p.pi.transpose() * p.h_bar;
  p.beta.reserve(static_cast<std::size_t>(rc.G.cols()));
  for (Eigen::Index m = 0; m < rc.G.cols(); ++m) {
    Matrix beta(2 * n, 2);
    beta.col(0) << rc.G.col(m).real(), rc.G.col(m).imag();
    beta.col(1) << rc.G.col(m).imag(), -rc.G.col(m).real();
    p.beta.push_back(std::move(beta));
  }
  p.gamma = rc.gamma;
  p.inr_caps = rc.inr_caps;
  p.sigma_r2 = rc.sigma_r2;
  p.psi = rc.psi;
  p.phases = rc.phases;
  const double t = std::tan(rc.psi);
  p.A.resize(2 * n, 2 * k);
  p.A << p.h_bar * t - p.b, p.h_bar * t + p.b;
  return p;
}

CiProblem build_problem(const ChannelSet& cs, const Vector& phases, int order,
                        const LinkBudget& budget) {
  return realify(rotate_channels(cs, phases, order, budget));
}

Vector CiProblem::ci_offset() const {
  Vector o(2 * k());
  const Vector root = gamma.cwiseSqrt() * tan_psi();
  o << root, root;
  return o;
}

Matrix CiProblem::interference_gram() const {
  Matrix out = Matrix::Zero(2 * n(), 2 * n());
  for (const auto& bm : beta) out.noalias() += bm * bm.transpose();
  return out;
}

BeamformingSolution make_solution(const CiProblem& p, const Vector& w2) {
  BeamformingSolution s;
  s.w2 = w2;
  s.w = from_w2(w2);
  s.power = w2.squaredNorm();
  const int k = p.k();
  s.precoders.resize(p.n(), k);
  for (int i = 0; i < k; ++i)
    s.precoders.col(i) = s.w * (std::polar(1.0, p.phases(0) - p.phases(i)) / static_cast<double>(k));
  s.inr.resize(p.m());
  s.interference = 0.0;
  for (int m = 0; m < p.m(); ++m) {
    const double u = (p.beta[static_cast<std::size_t>(m)].transpose() * w2).squaredNorm();
    s.interference += u;
    s.inr(m) = u / p.sigma_r2;
  }
  s.ci_slack = p.A.transpose() * w2 - p.ci_offset();
  return s;
}

std::string to_string(GpStatus s) {
  switch (s) {
    case GpStatus::converged: return "converged";
    case GpStatus::max_iterations: return "max_iterations";
    case GpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

}  // namespace ciradar
