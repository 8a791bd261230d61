#pragma once

// Worst-case robust power minimization under norm-bounded channel errors.

#include "ciradar/ci_engine.hpp"

namespace ciradar {

struct RobustCiProblem {
  CiProblem nominal;      // built from the estimated channels
  Vector targets;         // Gamma_i, linear
  Vector f_norms;         // ||f^_i||
  double sigma_c2 = 1.0;
  double radar_power = 1.0;
  double delta_h = 0.0;
  double delta_g = 0.0;
  double delta_f = 0.0;
  Vector inflated_gamma;  // worst-case Gamma~_i
  Vector inr_inflation;   // 2 delta_g^2 + 4 delta_g ||g_bar_m||
};

/// Gamma (sigma_C^2 + P_R (||f^|| + delta_f)^2), expanded so that delta_f = 0
/// reproduces the nominal target exactly.
double worst_case_gamma(double gamma, const CVector& f_hat, double delta_f, double sigma_c2,
                        double radar_power);

/// ||beta_m^T w2||^2 + (2 delta_g^2 + 4 delta_g ||g_bar||) ||w2||^2 <= R_m sigma_R^2,
/// where beta_m is assembled from g_bar = [Re g~_m; Im g~_m].
QuadraticConstraint robust_inr_constraint(const Vector& g_bar, double delta_g, double inr_cap,
                                          double sigma_r2);

/// The two CI rows of one user with channel uncertainty delta_h:
///   +-b^T w2 - h_bar^T w2 tan(psi) + delta_h ||w1 -+ w2 tan(psi)|| + sqrt(gamma) tan(psi) <= 0
/// with w1 = Pi w2. Returned as cones; with delta_h = 0 use robust_sinr_linear.
std::pair<ConeConstraint, ConeConstraint> robust_sinr_constraints(const Vector& h_bar, const Matrix& pi,
                                                                  double delta_h, double gamma,
                                                                  double psi);
std::pair<LinearConstraint, LinearConstraint> robust_sinr_linear(const Vector& h_bar, const Matrix& pi,
                                                                 double gamma, double psi);

RobustCiProblem build_robust_problem(const ChannelSet& cs, const Vector& phases, int order,
                                     const LinkBudget& budget, double delta_h, double delta_g,
                                     double delta_f);

QcqpSpec robust_spec(const RobustCiProblem& rp);
EngineResult solve_robust(const RobustCiProblem& rp, const QcqpOptions& opts = {});

}  // namespace ciradar
