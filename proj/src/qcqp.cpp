#include "ciradar/qcqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ciradar {

std::string to_string(QcqpStatus s) {
  switch (s) {
    case QcqpStatus::optimal: return "optimal";
    case QcqpStatus::infeasible: return "infeasible";
    case QcqpStatus::numerical_failure: return "numerical_failure";
    case QcqpStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

namespace {

bool is_psd(const Matrix& Q) {
  if (Q.rows() == 0) return true;
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -1e-10 * scale;
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string("qcqp: non-finite entries in ") + what);
}

}  // namespace

void QcqpSpec::validate() const {
  if (n < 1) throw std::invalid_argument("qcqp: dimension must be positive");
  if (Q0.rows() != n || Q0.cols() != n || q0.size() != n)
    throw std::invalid_argument("qcqp: objective shape mismatch");
  check_finite(Q0, "Q0");
  check_finite(q0, "q0");
  if ((Q0 - Q0.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, Q0.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("qcqp: Q0 is not symmetric");
  if (!is_psd(Q0)) throw std::invalid_argument("qcqp: Q0 is not positive semidefinite");
  for (const auto& l : linear) {
    if (l.a.size() != n) throw std::invalid_argument("qcqp: linear constraint shape mismatch");
    check_finite(l.a, "linear constraint");
    if (!std::isfinite(l.b)) throw std::invalid_argument("qcqp: non-finite linear bound");
  }
  for (const auto& q : quadratic) {
    if (q.Q.rows() != n || q.Q.cols() != n || q.q.size() != n)
      throw std::invalid_argument("qcqp: quadratic constraint shape mismatch");
    check_finite(q.Q, "quadratic constraint");
    check_finite(q.q, "quadratic constraint");
    if ((q.Q - q.Q.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, q.Q.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("qcqp: quadratic constraint matrix is not symmetric");
    if (!is_psd(q.Q)) throw std::invalid_argument("qcqp: quadratic constraint matrix is not PSD");
    if (!std::isfinite(q.r)) throw std::invalid_argument("qcqp: non-finite quadratic bound");
  }
  for (const auto& c : cones) {
    if (c.B.cols() != n || c.e.size() != c.B.rows() || c.c.size() != n)
      throw std::invalid_argument("qcqp: cone constraint shape mismatch");
    check_finite(c.B, "cone constraint");
    check_finite(c.e, "cone constraint");
    check_finite(c.c, "cone constraint");
    if (!std::isfinite(c.d)) throw std::invalid_argument("qcqp: non-finite cone offset");
  }
}

double QcqpSpec::objective(const Vector& x) const { return x.dot(Q0 * x) + q0.dot(x); }

double QcqpSpec::max_violation(const Vector& x) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& l : linear) worst = std::max(worst, l.a.dot(x) - l.b);
  for (const auto& q : quadratic) worst = std::max(worst, x.dot(q.Q * x) + q.q.dot(x) - q.r);
  for (const auto& c : cones) worst = std::max(worst, (c.B * x + c.e).norm() - c.c.dot(x) - c.d);
  return worst;
}

int QcqpSpec::barrier_degree() const {
  return static_cast<int>(linear.size() + quadratic.size() + 2 * cones.size());
}

namespace {

// Centering objective t * f0(x) - sum log(-f_i(x)).
class Barrier {
 public:
  explicit Barrier(const QcqpSpec& spec) : spec_(spec) {}

  // Returns false when x is outside the strict interior.
  bool value(const Vector& x, double t, double& out) const {
    double v = t * spec_.objective(x);
    for (const auto& l : spec_.linear) {
      const double s = l.b - l.a.dot(x);
      if (!(s > 0.0)) return false;
      v -= std::log(s);
    }
    for (const auto& q : spec_.quadratic) {
      const double s = q.r - x.dot(q.Q * x) - q.q.dot(x);
      if (!(s > 0.0)) return false;
      v -= std::log(s);
    }
    for (const auto& c : spec_.cones) {
      const double s = c.c.dot(x) + c.d;
      if (!(s > 0.0)) return false;
      const double u = s * s - (c.B * x + c.e).squaredNorm();
      if (!(u > 0.0)) return false;
      v -= std::log(u);
    }
    out = v;
    return std::isfinite(v);
  }

  void derivatives(const Vector& x, double t, Vector& g, Matrix& H) const {
    g = t * (2.0 * (spec_.Q0 * x) + spec_.q0);
    H = 2.0 * t * spec_.Q0;
    for (const auto& l : spec_.linear) {
      const double s = l.b - l.a.dot(x);
      g += l.a / s;
      H.noalias() += (l.a * l.a.transpose()) / (s * s);
    }
    for (const auto& q : spec_.quadratic) {
      const Vector grad = 2.0 * (q.Q * x) + q.q;
      const double s = q.r - x.dot(q.Q * x) - q.q.dot(x);
      g += grad / s;
      H.noalias() += (grad * grad.transpose()) / (s * s) + (2.0 / s) * q.Q;
    }
    for (const auto& c : spec_.cones) {
      const double s = c.c.dot(x) + c.d;
      const Vector r = c.B * x + c.e;
      const double u = s * s - r.squaredNorm();
      const Vector du = 2.0 * s * c.c - 2.0 * (c.B.transpose() * r);
      g -= du / u;
      H.noalias() += (du * du.transpose()) / (u * u);
      H.noalias() -= (2.0 / u) * (c.c * c.c.transpose() - c.B.transpose() * c.B);
    }
  }

 private:
  const QcqpSpec& spec_;
};

Vector newton_direction(const Matrix& H, const Vector& g) {
  const double scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
  double tau = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Matrix Hr = H;
    if (tau > 0.0) Hr.diagonal().array() += tau;
    Eigen::LDLT<Matrix> ldlt(Hr);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Vector d = ldlt.solve(-g);
      if (d.allFinite() && g.dot(d) < 0.0) return d;
    }
    tau = tau == 0.0 ? 1e-12 * scale : tau * 100.0;
  }
  return Vector();
}

struct BarrierRun {
  Vector x;
  QcqpStatus status = QcqpStatus::max_iterations;
  double t = 1.0;
  double kkt = 0.0;
  int newton_steps = 0;
};

// Runs the barrier method from a strictly feasible x. `stop_early` lets
// phase 1 leave as soon as a strictly feasible point of the original problem
// is found.
template <typename Stop>
BarrierRun barrier_method(const QcqpSpec& spec, Vector x, const QcqpOptions& opts, Stop stop_early) {
  const Barrier barrier(spec);
  const int nu = spec.barrier_degree();
  BarrierRun run;
  run.t = static_cast<double>(nu) / std::max(1.0, std::abs(spec.objective(x)));
  Vector g;
  Matrix H;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    bool stalled = false;
    for (int inner = 0; inner < opts.max_newton; ++inner) {
      barrier.derivatives(x, run.t, g, H);
      const Vector d = newton_direction(H, g);
      if (d.size() == 0) {
        stalled = true;
        break;
      }
      const double decrement = -g.dot(d);
      if (decrement <= 1e-14) break;
      double f0 = 0.0;
      barrier.value(x, run.t, f0);
      double step = 1.0;
      double f1 = 0.0;
      bool ok = false;
      for (int bt = 0; bt < 80; ++bt) {
        const Vector trial = x + step * d;
        if (barrier.value(trial, run.t, f1) && f1 <= f0 - 0.01 * step * decrement) {
          x = trial;
          ok = true;
          break;
        }
        step *= 0.5;
      }
      ++run.newton_steps;
      if (!ok) {
        stalled = true;
        break;
      }
      if (decrement <= 1e-12) break;
    }
    barrier.derivatives(x, run.t, g, H);
    run.kkt = g.norm() / run.t;
    run.x = x;
    if (stop_early(x)) {
      run.status = QcqpStatus::optimal;
      return run;
    }
    const double gap = nu / run.t;
    if (gap < opts.gap_tolerance) {
      run.status = QcqpStatus::optimal;
      return run;
    }
    if (stalled) {
      // Accept a stalled run only once the barrier gap is already tiny
      // relative to the objective scale.
      run.status = gap < 1e-6 * std::max(1.0, std::abs(spec.objective(x))) ? QcqpStatus::optimal
                                                                             : QcqpStatus::numerical_failure;
      return run;
    }
    run.t *= opts.barrier_growth;
  }
  run.x = x;
  run.status = QcqpStatus::max_iterations;
  return run;
}

QcqpSpec phase1_spec(const QcqpSpec& spec, double radius) {
  const int n = spec.n;
  QcqpSpec p1;
  p1.n = n + 1;
  p1.Q0 = Matrix::Zero(n + 1, n + 1);
  p1.q0 = Vector::Zero(n + 1);
  p1.q0(n) = 1.0;
  auto lift = [n](const Vector& v, double last) {
    Vector out(n + 1);
    out << v, last;
    return out;
  };
  for (const auto& l : spec.linear) p1.linear.push_back({lift(l.a, -1.0), l.b});
  for (const auto& q : spec.quadratic) {
    Matrix Q = Matrix::Zero(n + 1, n + 1);
    Q.topLeftCorner(n, n) = q.Q;
    p1.quadratic.push_back({Q, lift(q.q, -1.0), q.r});
  }
  for (const auto& c : spec.cones) {
    Matrix B = Matrix::Zero(c.B.rows(), n + 1);
    B.leftCols(n) = c.B;
    p1.cones.push_back({B, c.e, lift(c.c, 1.0), c.d});
  }
  Vector floor = Vector::Zero(n + 1);
  floor(n) = -1.0;
  p1.linear.push_back({floor, 1.0});
  Matrix ball = Matrix::Identity(n + 1, n + 1);
  ball(n, n) = 0.0;
  p1.quadratic.push_back({ball, Vector::Zero(n + 1), radius * radius});
  return p1;
}

}  // namespace

QcqpResult solve_qcqp(const QcqpSpec& spec, const QcqpOptions& opts) {
  spec.validate();
  QcqpResult result;
  Vector x = opts.start ? *opts.start : Vector::Zero(spec.n);
  if (x.size() != spec.n) throw std::invalid_argument("qcqp: start point has the wrong dimension");

  if (spec.barrier_degree() == 0) {
    Eigen::LDLT<Matrix> ldlt(2.0 * spec.Q0);
    result.x = ldlt.solve(-spec.q0);
    const bool ok = ldlt.info() == Eigen::Success && result.x.allFinite() &&
                    (2.0 * spec.Q0 * result.x + spec.q0).norm() < 1e-8 * std::max(1.0, spec.q0.norm());
    result.status = ok ? QcqpStatus::optimal : QcqpStatus::numerical_failure;
    result.objective = spec.objective(result.x);
    result.max_violation = 0.0;
    return result;
  }

  int newton_total = 0;
  if (!(spec.max_violation(x) < 0.0)) {
    const double radius = opts.phase1_radius * std::max(1.0, x.norm());
    const QcqpSpec p1 = phase1_spec(spec, radius);
    Vector z(spec.n + 1);
    z << x, std::max(spec.max_violation(x), 0.0) + 1.0;
    const int n = spec.n;
    BarrierRun r1 = barrier_method(p1, z, opts, [n](const Vector& v) { return v(n) < 0.0; });
    newton_total += r1.newton_steps;
    x = r1.x.head(spec.n);
    if (!(spec.max_violation(x) < 0.0)) {
      result.x = x;
      result.objective = spec.objective(x);
      result.status = r1.status == QcqpStatus::numerical_failure ? QcqpStatus::numerical_failure
                                                                 : QcqpStatus::infeasible;
      result.newton_steps = newton_total;
      result.max_violation = spec.max_violation(x);
      return result;
    }
  }

  BarrierRun run = barrier_method(spec, x, opts, [](const Vector&) { return false; });
  result.x = run.x;
  result.objective = spec.objective(run.x);
  result.status = run.status;
  result.gap = spec.barrier_degree() / run.t;
  result.kkt_residual = run.kkt;
  result.newton_steps = newton_total + run.newton_steps;
  result.max_violation = spec.max_violation(run.x);
  return result;
}

}  // namespace ciradar
