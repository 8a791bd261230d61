#include "ciradar/qcqp.hpp"

#include <gtest/gtest.h>

using namespace ciradar;

namespace {
QcqpSpec least_norm(int n) {
  QcqpSpec s;
  s.n = n;
  s.Q0 = Matrix::Identity(n, n);
  s.q0 = Vector::Zero(n);
  return s;
}
}  // namespace

TEST(Qcqp, ProjectionOntoHalfspace) {
  QcqpSpec s = least_norm(3);
  Vector a(3);
  a << 1.0, 2.0, -2.0;
  s.linear.push_back({-a, -1.0});  // a^T x >= 1
  const QcqpResult r = solve_qcqp(s);
  ASSERT_EQ(r.status, QcqpStatus::optimal);
  EXPECT_LT((r.x - a / a.squaredNorm()).norm(), 1e-6);
  EXPECT_NEAR(r.objective, 1.0 / 9.0, 1e-7);
  EXPECT_LE(r.max_violation, 1e-9);
}

TEST(Qcqp, LinearObjectiveOverBall) {
  QcqpSpec s;
  s.n = 4;
  s.Q0 = Matrix::Zero(4, 4);
  s.q0 = Vector::LinSpaced(4, 1.0, 4.0);
  s.quadratic.push_back({Matrix::Identity(4, 4), Vector::Zero(4), 1.0});
  const QcqpResult r = solve_qcqp(s);
  ASSERT_EQ(r.status, QcqpStatus::optimal);
  EXPECT_LT((r.x + s.q0.normalized()).norm(), 1e-4);
  EXPECT_NEAR(r.objective, -s.q0.norm(), 1e-7);
}

TEST(Qcqp, ConeConstraint) {
  // min ||x||^2 subject to ||x - p|| <= 1 has the solution p (1 - 1/||p||).
  QcqpSpec s = least_norm(2);
  Vector p(2);
  p << 3.0, 4.0;
  s.cones.push_back({Matrix::Identity(2, 2), -p, Vector::Zero(2), 1.0});
  const QcqpResult r = solve_qcqp(s);
  ASSERT_EQ(r.status, QcqpStatus::optimal);
  EXPECT_LT((r.x - p * 0.8).norm(), 1e-5);
  EXPECT_NEAR(r.objective, 16.0, 1e-5);
}

TEST(Qcqp, DetectsInfeasibility) {
  QcqpSpec s = least_norm(1);
  s.linear.push_back({Vector::Constant(1, -1.0), -1.0});  // x >= 1
  s.linear.push_back({Vector::Constant(1, 1.0), 0.0});    // x <= 0
  EXPECT_EQ(solve_qcqp(s).status, QcqpStatus::infeasible);
}

TEST(Qcqp, ValidateRejectsBadInput) {
  QcqpSpec s = least_norm(2);
  s.Q0(0, 0) = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  QcqpSpec t = least_norm(2);
  t.linear.push_back({Vector::Zero(3), 0.0});
  EXPECT_THROW(t.validate(), std::invalid_argument);
  QcqpSpec u = least_norm(2);
  u.quadratic.push_back({Matrix::Identity(2, 2), Vector::Zero(2), std::nan("")});
  EXPECT_THROW(u.validate(), std::invalid_argument);
}

TEST(Qcqp, UnconstrainedQuadratic) {
  QcqpSpec s = least_norm(2);
  s.q0 << -2.0, 4.0;
  const QcqpResult r = solve_qcqp(s);
  ASSERT_EQ(r.status, QcqpStatus::optimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-8);
  EXPECT_NEAR(r.x(1), -2.0, 1e-8);
}

TEST(Qcqp, BarrierDegreeCountsCones) {
  QcqpSpec s = least_norm(2);
  s.linear.push_back({Vector::Ones(2), 1.0});
  s.quadratic.push_back({Matrix::Identity(2, 2), Vector::Zero(2), 1.0});
  s.cones.push_back({Matrix::Identity(2, 2), Vector::Zero(2), Vector::Zero(2), 1.0});
  EXPECT_EQ(s.barrier_degree(), 4);
}
