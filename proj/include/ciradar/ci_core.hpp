#pragma once

// Constructive-interference power and interference minimization.

#include "ciradar/scene.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ciradar {

/// SINR targets per user and INR caps per radar antenna, in dB. A single entry
/// is broadcast to every user (antenna).
struct LinkBudget {
  std::vector<double> sinr_db{20.0};
  std::vector<double> inr_db{0.0};
  double sigma_c2 = 1.0;     // mW
  double sigma_r2 = 1.0;     // mW
  double radar_power = 1.0;  // mW

  Vector sinr_linear(int k) const;
  Vector inr_linear(int m) const;
};

/// Channels rotated to the phase reference of the first user.
struct RotatedChannels {
  CMatrix H;       // h~_i = h_i e^{j(phi_1 - phi_i)}
  CMatrix G;       // g~_m = g_m e^{j phi_1}
  Vector gamma;    // Gamma~_i = Gamma_i (sigma_C^2 + P_R ||f_i||^2), mW
  Vector inr_caps; // R_m, linear
  Vector phases;   // phi_k for the slot
  double sigma_r2 = 1.0;
  double psi = kPi / 4.0;
};

RotatedChannels rotate_channels(const ChannelSet& cs, const Vector& phases, int order,
                                const LinkBudget& budget);

/// Real-valued data of the power minimization problem for one symbol slot.
/// Unknown: w2 = [Re w; -Im w] in R^{2N}.
struct CiProblem {
  Matrix h_bar;               // 2N x K, columns [Re h~_i; Im h~_i]
  Matrix b;                   // 2N x K, b_i = Pi^T h_bar_i
  std::vector<Matrix> beta;   // M matrices, 2N x 2, beta_m^T w2 = [Re; Im](g~_m^T w)
  Matrix pi;                  // 2N x 2N, [[0, -I], [I, 0]]
  Vector gamma;               // Gamma~_i, mW
  Vector inr_caps;            // R_m, linear
  double sigma_r2 = 1.0;
  double psi = kPi / 4.0;
  Vector phases;
  Matrix A;                   // 2N x 2K, [h_bar tan(psi) - b, h_bar tan(psi) + b]

  int n() const { return static_cast<int>(h_bar.rows() / 2); }
  int k() const { return static_cast<int>(h_bar.cols()); }
  int m() const { return static_cast<int>(beta.size()); }
  double tan_psi() const { return std::tan(psi); }
  /// tan(psi) * [sqrt(Gamma~); sqrt(Gamma~)], the constant part of the CI rows.
  Vector ci_offset() const;
  /// Sum of beta_m beta_m^T.
  Matrix interference_gram() const;
};

CiProblem realify(const RotatedChannels& rc);
CiProblem build_problem(const ChannelSet& cs, const Vector& phases, int order,
                        const LinkBudget& budget);

/// w2 = [Re w; -Im w] and back.
Vector to_w2(const CVector& w);
CVector from_w2(const Vector& w2);

struct DualEvaluation {
  double value = 0.0;   // f(lambda, c), the minimization form of the dual
  Vector gradient;      // d f / d[lambda; c]
  Vector z;             // M A lambda; the primal point is z / 2
};

/// Thrown when the (I + sum c_m beta_m beta_m^T) factorization breaks down.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

DualEvaluation dual_value_and_gradient(const CiProblem& p, const Vector& lambda, const Vector& c);

struct GpOptions {
  double tolerance = 1e-7;
  int max_iterations = 10000;
  double initial_step = 1.0;
  double shrink = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 50;
  double step_growth = 2.0;
  double max_step = 1e12;
  double infeasible_factor = 1e9;
  std::uint64_t seed = 0;
  bool record_history = false;
};

enum class GpStatus { converged, max_iterations, infeasible };
std::string to_string(GpStatus s);

struct DualState {
  Vector lambda;
  Vector c;
  double dual_objective = 0.0;  // -f, the value of the maximization form
  int iterations = 0;
  double pg_norm = 0.0;
  GpStatus status = GpStatus::max_iterations;
  std::vector<double> history;  // dual_objective per accepted iterate
};

struct BeamformingSolution {
  CVector w;
  Vector w2;
  CMatrix precoders;    // N x K, t_k = w e^{j(phi_1 - phi_k)} / K
  double power = 0.0;   // ||w||^2, mW
  Vector inr;           // |g~_m^T w|^2 / sigma_R^2
  Vector ci_slack;      // -(constraint value) of the 2K CI rows; >= 0 when feasible
  double interference = 0.0;  // sum_m |g~_m^T w|^2, mW
};

BeamformingSolution make_solution(const CiProblem& p, const Vector& w2);

struct GpResult {
  DualState dual;
  BeamformingSolution solution;
};

GpResult solve_gp(const CiProblem& p, const GpOptions& opts = {});

/// Solves the problem without INR constraints and returns its optimum when
/// that point already satisfies every INR cap.
std::optional<GpResult> fast_path(const CiProblem& p, const GpOptions& opts = {});

}  // namespace ciradar
