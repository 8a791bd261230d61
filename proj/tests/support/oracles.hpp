#pragma once

// Independent reference computations used only by the tests.

#include "ciradar/ci_engine.hpp"

#include <functional>

namespace ciradar::oracle {

/// Central differences of f at x with step h per coordinate.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6);

/// dA/dtheta of the steering outer product by central differences.
CMatrix finite_difference_steering(double theta, std::span<const Position> positions, double h = 1e-6);

/// Minimum power of the single-user CI problem found by brute force over the
/// complex gain along h*/||h|| on a polar grid.
double single_user_grid_power(const CVector& h, double gamma_tilde, double psi, int radial = 4000, int angular = 721);

/// P(chi-squared_2(a^2) > b^2) from the non-central chi-squared distribution.
double marcum_q1_reference(double a, double b);

/// Conventional block-level precoders found by second-order cone programming:
/// SINR_k >= Gamma_k enforced as ||[h_k^T t_j (j != k), sigma~_k]|| <= Re(h_k^T t_k) / sqrt(Gamma_k).
struct ConventionalResult {
  CMatrix precoders;  // N x K
  double power = 0.0;
  double interference = 0.0;  // sum_m sum_k |g_m^T t_k|^2
  bool ok = false;
};

/// min sum_k ||t_k||^2 subject to SINR and INR caps.
ConventionalResult conventional_power_min(const ChannelSet& cs, const LinkBudget& budget);
/// min interference subject to SINR and sum_k ||t_k||^2 <= budget.
ConventionalResult conventional_interf_min(const ChannelSet& cs, const LinkBudget& budget, double power_budget_mw);

/// Classical SINR of fixed precoders for every user.
Vector conventional_sinr(const ChannelSet& cs, const LinkBudget& budget, const CMatrix& precoders);

}  // namespace ciradar::oracle
