#include "ciradar/robust.hpp"

#include <gtest/gtest.h>

using namespace ciradar;

namespace {
LinkBudget make_budget(double gamma_db, double inr_db) {
  LinkBudget b;
  b.sinr_db = {gamma_db};
  b.inr_db = {inr_db};
  return b;
}
}  // namespace

TEST(Robust, WorstCaseGammaReducesToNominal) {
  const ChannelSet cs = gen_channels(4, 2, 3, 1);
  const double nominal = 10.0 * (1.0 + cs.F.col(0).squaredNorm());
  EXPECT_EQ(worst_case_gamma(10.0, cs.F.col(0), 0.0, 1.0, 1.0), nominal);
  const double inflated = worst_case_gamma(10.0, cs.F.col(0), 0.1, 1.0, 1.0);
  EXPECT_NEAR(inflated, 10.0 * (1.0 + std::pow(cs.F.col(0).norm() + 0.1, 2)), 1e-12);
  EXPECT_THROW(worst_case_gamma(10.0, cs.F.col(0), -0.1, 1.0, 1.0), std::invalid_argument);
}

TEST(Robust, InrConstraintBoundsEverySampledError) {
  Rng rng(2);
  const ChannelSet cs = gen_channels(5, 1, 1, 3);
  const CVector g = cs.G.col(0);
  Vector g_bar(10);
  g_bar << g.real(), g.imag();
  const double delta = 0.3;
  const QuadraticConstraint q = robust_inr_constraint(g_bar, delta, 1.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    CVector w(5);
    for (int i = 0; i < 5; ++i) w(i) = complex_normal(rng);
    const Vector w2 = to_w2(w);
    const CVector e = sample_ball(5, delta, rng, t % 2 == 0);
    const double actual = std::norm(((g + e).transpose() * w).value());
    EXPECT_LE(actual, w2.dot(q.Q * w2) * (1 + 1e-12));
  }
}

TEST(Robust, ZeroRadiusMatchesNominal) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const ChannelSet cs = gen_channels(8, 3, 2, seed);
    const Vector phases = psk_frame(3, 1, 4, seed).slot(0);
    const LinkBudget b = make_budget(10.0, 0.0);
    const RobustCiProblem rp = build_robust_problem(cs, phases, 4, b, 0.0, 0.0, 0.0);
    const EngineResult robust = solve_robust(rp);
    const EngineResult nominal = power_min_qcqp(build_problem(cs, phases, 4, b));
    ASSERT_TRUE(robust.ok());
    EXPECT_NEAR(robust.solution.power, nominal.solution.power, 1e-6 * nominal.solution.power);
    const QcqpSpec spec = robust_spec(rp);
    EXPECT_TRUE(spec.cones.empty());
    EXPECT_EQ(spec.linear.size(), 6u);
  }
}

TEST(Robust, PowerGrowsWithUncertainty) {
  const ChannelSet cs = gen_channels(8, 3, 2, 5);
  const Vector phases = psk_frame(3, 1, 4, 6).slot(0);
  const LinkBudget b = make_budget(10.0, 20.0);
  double last = 0.0;
  for (double d : {0.0, 0.01, 0.02, 0.05}) {
    const EngineResult r = solve_robust(build_robust_problem(cs, phases, 4, b, d, d, d));
    ASSERT_TRUE(r.ok()) << d;
    EXPECT_GE(r.solution.power, last * (1 - 1e-7));
    last = r.solution.power;
  }
}

TEST(Robust, SolutionSurvivesSampledErrors) {
  const ChannelSet est = gen_channels(8, 3, 2, 8);
  const Vector phases = psk_frame(3, 1, 4, 9).slot(0);
  const LinkBudget b = make_budget(10.0, 20.0);
  const double d = 0.04;
  const EngineResult r = solve_robust(build_robust_problem(est, phases, 4, b, d, d, d));
  ASSERT_TRUE(r.ok());
  const Vector caps = b.inr_linear(2);
  for (int s = 0; s < 500; ++s) {
    const ChannelSet truth = perturb_channels(est, d, d, d, 1000 + s);
    const LinkReport rep = evaluate(truth, phases, 4, b, r.solution);
    EXPECT_GE(rep.ci_margin.minCoeff(), -1e-9);
    for (int m = 0; m < 2; ++m) EXPECT_LE(rep.inr(m), caps(m) * (1 + 1e-9));
  }
}

TEST(Robust, SinrConesReduceToLinearRows) {
  const ChannelSet cs = gen_channels(3, 1, 0, 2);
  const CiProblem p = build_problem(cs, Vector::Zero(1), 4, make_budget(10.0, 0.0));
  const auto [c1, c2] = robust_sinr_constraints(p.h_bar.col(0), p.pi, 0.0, p.gamma(0), p.psi);
  const auto [l1, l2] = robust_sinr_linear(p.h_bar.col(0), p.pi, p.gamma(0), p.psi);
  EXPECT_LT((c1.c + l1.a).norm(), 1e-15);
  EXPECT_LT((c2.c + l2.a).norm(), 1e-15);
  EXPECT_EQ(c1.d, l1.b);
  EXPECT_EQ(c1.B.norm(), 0.0);
  EXPECT_THROW(build_robust_problem(cs, Vector::Zero(1), 4, make_budget(10.0, 0.0), -1.0, 0.0, 0.0),
               std::invalid_argument);
}
