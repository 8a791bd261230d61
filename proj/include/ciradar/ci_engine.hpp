#pragma once

// CI problems solved through the generic QCQP engine, and evaluation of a
// precoding solution against a channel set.

#include "ciradar/ci_core.hpp"
#include "ciradar/qcqp.hpp"

namespace ciradar {

struct EngineResult {
  BeamformingSolution solution;
  QcqpResult qcqp;
  bool ok() const { return qcqp.status == QcqpStatus::optimal; }
};

/// The power minimization problem as a QCQP in w2: min ||w2||^2 subject to
/// the CI rows and ||beta_m^T w2||^2 <= R_m sigma_R^2.
QcqpSpec power_min_spec(const CiProblem& p);
EngineResult power_min_qcqp(const CiProblem& p, const QcqpOptions& opts = {});

/// Interference minimization: min sum_m ||beta_m^T w2||^2 subject to the CI
/// rows and ||w2||^2 <= budget. When the interference form vanishes (G = 0 or
/// no radar antennas) the objective becomes ||w2||^2 so the minimum-norm
/// feasible point is returned.
QcqpSpec interf_min_spec(const CiProblem& p, double budget_mw);
EngineResult solve_interf_min(const CiProblem& p, double budget_mw, const QcqpOptions& opts = {});

struct LinkReport {
  Vector sinr;        // classical SINR per user, linear
  Vector ci_margin;   // (Re - sqrt(Gamma~)) tan(psi) - |Im| per user, >= 0 when CI holds
  Vector inr;         // per radar antenna, linear
  double power = 0.0;           // instantaneous ||sum_k t_k e^{j(phi_k - phi_1)}||^2, mW
  double precoder_power = 0.0;  // sum_k ||t_k||^2, mW
};

LinkReport evaluate(const ChannelSet& cs, const Vector& phases, int order, const LinkBudget& budget,
                    const BeamformingSolution& solution);

}  // namespace ciradar
