#pragma once

// Log-barrier interior point solver for small convex QCQPs:
//
//   minimize    x^T Q0 x + q0^T x
//   subject to  a_i^T x <= b_i
//               x^T Q_j x + q_j^T x <= r_j        (Q_j PSD)
//               ||B_l x + e_l|| <= c_l^T x + d_l
//
// The cone rows are an extension used by the robust SINR constraints.

#include "ciradar/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ciradar {

struct LinearConstraint {
  Vector a;
  double b = 0.0;
};

struct QuadraticConstraint {
  Matrix Q;
  Vector q;
  double r = 0.0;
};

struct ConeConstraint {
  Matrix B;
  Vector e;
  Vector c;
  double d = 0.0;
};

struct QcqpSpec {
  int n = 0;
  Matrix Q0;
  Vector q0;
  std::vector<LinearConstraint> linear;
  std::vector<QuadraticConstraint> quadratic;
  std::vector<ConeConstraint> cones;

  /// Checks shapes, finiteness and that every quadratic form is PSD. Throws
  /// std::invalid_argument on failure.
  void validate() const;
  double objective(const Vector& x) const;
  /// Largest constraint value (<= 0 means feasible); cone rows are measured
  /// as ||Bx + e|| - (c^T x + d).
  double max_violation(const Vector& x) const;
  /// Number of barrier terms weighted by their degree.
  int barrier_degree() const;
};

struct QcqpOptions {
  double gap_tolerance = 1e-8;
  double barrier_growth = 10.0;
  int max_newton = 200;
  int max_outer = 60;
  double phase1_radius = 1e4;
  std::optional<Vector> start;
};

enum class QcqpStatus { optimal, infeasible, numerical_failure, max_iterations };
std::string to_string(QcqpStatus s);

struct QcqpResult {
  Vector x;
  double objective = 0.0;
  QcqpStatus status = QcqpStatus::numerical_failure;
  double gap = 0.0;           // barrier duality gap nu / t at exit
  double kkt_residual = 0.0;  // ||grad of the centering objective|| / t at exit
  int newton_steps = 0;
  double max_violation = 0.0;
};

QcqpResult solve_qcqp(const QcqpSpec& spec, const QcqpOptions& opts = {});

}  // namespace ciradar
