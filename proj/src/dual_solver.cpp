#include "ciradar/ci_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace ciradar {

namespace {

struct Point {
  DualEvaluation eval;
  Vector a;                          // A lambda
  std::optional<Eigen::LLT<Matrix>> factor;  // of I + sum c_m beta_m beta_m^T, absent when c = 0

  Vector solve(const Vector& rhs) const { return factor ? Vector(factor->solve(rhs)) : rhs; }
};

struct Evaluator {
  const CiProblem& p;
  Vector offset;
  Vector caps;  // R_m sigma_R^2

  explicit Evaluator(const CiProblem& problem)
      : p(problem), offset(problem.ci_offset()), caps(problem.inr_caps * problem.sigma_r2) {}

  Point operator()(const Vector& lambda, const Vector& c) const {
    const int kk = 2 * p.k();
    const int m = p.m();
    Point pt;
    pt.a = p.A * lambda;
    DualEvaluation& out = pt.eval;
    out.gradient.resize(kk + c.size());
    if (c.size() > 0 && c.maxCoeff() > 0.0) {
      Matrix system = Matrix::Identity(2 * p.n(), 2 * p.n());
      for (int i = 0; i < m; ++i) {
        if (c(i) == 0.0) continue;
        const Matrix& bm = p.beta[static_cast<std::size_t>(i)];
        system.noalias() += c(i) * (bm * bm.transpose());
      }
      pt.factor.emplace(system);
      if (pt.factor->info() != Eigen::Success)
        throw SolverError("dual evaluation: factorization of I + sum c_m beta_m beta_m^T failed");
    }
    out.z = pt.solve(pt.a);
    out.value = 0.25 * pt.a.dot(out.z) - offset.dot(lambda);
    out.gradient.head(kk) = 0.5 * (p.A.transpose() * out.z) - offset;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double proj = (p.beta[static_cast<std::size_t>(i)].transpose() * out.z).squaredNorm();
      out.value += caps(i) * c(i);
      out.gradient(kk + i) = -0.25 * proj + caps(i);
    }
    return pt;
  }

  // f(x1) - f(x0) assembled from differences only, so it stays accurate when
  // the change is far below the rounding level of f itself.
  double difference(const Vector& x0, const Point& p0, const Vector& x1, const Point& p1, int kk) const {
    const Vector d = x1 - x0;
    const Vector da = p.A * d.head(kk);
    const Vector za = p1.solve(p0.a);  // M1 a0
    double quad = 2.0 * da.dot(za) + da.dot(p1.solve(da));
    for (Eigen::Index i = kk; i < d.size(); ++i) {
      if (d(i) == 0.0) continue;
      const Matrix& bm = p.beta[static_cast<std::size_t>(i - kk)];
      quad -= d(i) * (bm.transpose() * za).dot(bm.transpose() * p0.eval.z);
    }
    double diff = 0.25 * quad - offset.dot(d.head(kk));
    for (Eigen::Index i = kk; i < d.size(); ++i) diff += caps(i - kk) * d(i);
    return diff;
  }
};

Vector project(const Vector& x) { return x.cwiseMax(0.0); }

double residual(const Vector& x, const Vector& gradient) {
  return (x - project(x - gradient)).cwiseAbs().maxCoeff();
}

// Projected gradient with Armijo backtracking on x = [lambda; c]. When
// `with_c` is false the INR multipliers are held at zero.
GpResult run_projected_gradient(const CiProblem& p, const GpOptions& opts, bool with_c) {
  if (p.k() < 1) throw std::invalid_argument("solve_gp: problem has no users");
  const int kk = 2 * p.k();
  const int mm = with_c ? p.m() : 0;
  const Evaluator eval(p);

  Rng rng(opts.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Vector x(kk + mm);
  const double scale = 1.0 / static_cast<double>(2 * p.k() + p.m());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = uniform(rng) * scale;

  auto evaluate = [&](const Vector& v) { return eval(v.head(kk), v.tail(mm)); };

  DualState state;
  Point current = evaluate(x);
  const double divergence = opts.infeasible_factor * std::max(p.gamma.sum(), 1e-300);
  if (opts.record_history) state.history.push_back(-current.eval.value);

  double step = opts.initial_step;
  double next_step = step;
  int it = 0;
  state.status = GpStatus::max_iterations;
  for (; it < opts.max_iterations; ++it) {
    state.pg_norm = residual(x, current.eval.gradient);
    if (state.pg_norm < opts.tolerance) {
      state.status = GpStatus::converged;
      break;
    }
    if (it > 0) step = next_step;
    bool accepted = false;
    Vector candidate;
    Point trial;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      candidate = project(x - step * current.eval.gradient);
      trial = evaluate(candidate);
      const double decrease = current.eval.gradient.dot(candidate - x);
      const double dfx = eval.difference(x, current, candidate, trial, kk);
      if (dfx <= opts.armijo * decrease) {
        accepted = true;
        break;
      }
      step *= opts.shrink;
    }
    if (!accepted) break;
    // Barzilai-Borwein estimate as the next trial step, never below the
    // step-growth schedule.
    const Vector dx = candidate - x;
    const Vector dg = trial.eval.gradient - current.eval.gradient;
    const double curvature = dx.dot(dg);
    next_step = std::min(step * opts.step_growth, opts.max_step);
    if (curvature > 0.0) next_step = std::min(std::max(next_step, dx.squaredNorm() / curvature), opts.max_step);
    x = std::move(candidate);
    current = std::move(trial);
    if (opts.record_history) state.history.push_back(-current.eval.value);
    if (-current.eval.value > divergence) {
      state.status = GpStatus::infeasible;
      ++it;
      break;
    }
  }
  if (state.status == GpStatus::max_iterations) {
    state.pg_norm = residual(x, current.eval.gradient);
    if (state.pg_norm < opts.tolerance) state.status = GpStatus::converged;
  }

  state.iterations = it;
  state.lambda = x.head(kk);
  state.c = with_c ? Vector(x.tail(mm)) : Vector::Zero(p.m());
  state.dual_objective = -current.eval.value;

  Vector w2 = 0.5 * current.eval.z;
  if (state.status != GpStatus::infeasible) {
    // Scale up onto the CI cones; at convergence the factor is 1 + O(tolerance).
    const Vector offset = p.ci_offset();
    const Vector proj = p.A.transpose() * w2;
    double s = 1.0;
    for (Eigen::Index j = 0; j < proj.size(); ++j)
      if (proj(j) > 0.0) s = std::max(s, offset(j) / proj(j));
    w2 *= s;
  }
  return GpResult{std::move(state), make_solution(p, w2)};
}

}  // namespace

DualEvaluation dual_value_and_gradient(const CiProblem& p, const Vector& lambda, const Vector& c) {
  if (lambda.size() != 2 * p.k() || c.size() != p.m())
    throw std::invalid_argument("dual_value_and_gradient: expected lambda of size 2K and c of size M");
  if (lambda.minCoeff() < 0.0 || (c.size() > 0 && c.minCoeff() < 0.0))
    throw std::invalid_argument("dual_value_and_gradient: multipliers must be non-negative");
  return Evaluator(p)(lambda, c).eval;
}

GpResult solve_gp(const CiProblem& p, const GpOptions& opts) {
  return run_projected_gradient(p, opts, true);
}

std::optional<GpResult> fast_path(const CiProblem& p, const GpOptions& opts) {
  GpResult r = run_projected_gradient(p, opts, false);
  if (r.dual.status == GpStatus::infeasible) return std::nullopt;
  const Vector w2 = 0.5 * (p.A * r.dual.lambda);
  for (int m = 0; m < p.m(); ++m) {
    const double u = (p.beta[static_cast<std::size_t>(m)].transpose() * w2).squaredNorm();
    if (!(p.inr_caps(m) * p.sigma_r2 > u)) return std::nullopt;
  }
  return r;
}

}  // namespace ciradar
