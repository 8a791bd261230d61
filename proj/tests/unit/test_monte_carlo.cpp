#include "ciradar/monte_carlo.hpp"

#include <gtest/gtest.h>

using namespace ciradar;

namespace {
struct Bench {
  RadarScene scene = make_ula_scene(4, 20, WaveformMode::orthonormal, 2);
  ChannelSet cs = gen_channels(6, 3, 4, 5);
};

LinkBudget make_budget(double gamma_db) {
  LinkBudget b;
  b.sinr_db = {gamma_db};
  b.inr_db = {100.0};
  return b;
}
}  // namespace

TEST(MonteCarlo, FalseAlarmCalibration) {
  Bench s;
  const GaussianPolicy policy(0.2 * CMatrix::Identity(6, 6));
  DetectionConfig cfg;
  cfg.trials = 40000;
  cfg.target_present = false;
  cfg.eta = detection_threshold(0.05);
  cfg.seed = 3;
  const DetectionEstimate e = monte_carlo_detection(s.scene, s.cs.G, policy, cfg);
  EXPECT_NEAR(e.rate, 0.05, 0.01);
  EXPECT_LE(e.ci_low, e.rate);
  EXPECT_GE(e.ci_high, e.rate);
}

TEST(MonteCarlo, MatchesAnalyticDetectionProbability) {
  Bench s;
  const GaussianPolicy policy(0.2 * CMatrix::Identity(6, 6));
  const auto cov = interference_covariance_from(s.cs.G, policy.transmit_covariance(), 1.0);
  DetectionConfig cfg;
  cfg.trials = 20000;
  cfg.eta = detection_threshold(0.05);
  cfg.snr_linear = db_to_linear(-4.0);
  cfg.seed = 11;
  const double rho = noncentrality(cfg.snr_linear, 1.0, steering_outer(s.scene.theta, s.scene.positions), cov.J_tilde);
  const double pd = detection_probability_at(rho, cfg.eta);
  const DetectionEstimate e = monte_carlo_detection(s.scene, s.cs.G, policy, cfg);
  EXPECT_NEAR(e.rate, pd, 0.02);
  EXPECT_GT(pd, 0.1);
  EXPECT_LT(pd, 0.95);
}

TEST(MonteCarlo, HighSnrAlwaysDetects) {
  Bench s;
  const GaussianPolicy policy(0.2 * CMatrix::Identity(6, 6));
  DetectionConfig cfg;
  cfg.trials = 500;
  cfg.snr_linear = db_to_linear(20.0);
  cfg.direction = DirectionMode::grid;
  cfg.grid_points = 181;
  EXPECT_EQ(monte_carlo_detection(s.scene, s.cs.G, policy, cfg).rate, 1.0);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  Bench s;
  const GaussianPolicy policy(0.5 * CMatrix::Identity(6, 6));
  DetectionConfig cfg;
  cfg.trials = 3000;
  cfg.snr_linear = 0.3;
  cfg.seed = 99;
  const long one = monte_carlo_detection(s.scene, s.cs.G, policy, cfg).detections;
  cfg.threads = 3;
  EXPECT_EQ(monte_carlo_detection(s.scene, s.cs.G, policy, cfg).detections, one);
}

TEST(GridSearch, FindsTheTargetDirection) {
  Bench s;
  const CMatrix A = steering_outer(s.scene.theta, s.scene.positions);
  const auto [theta, value] = grid_search_direction(A * 5.0, s.scene.positions, CMatrix::Identity(4, 4), 721);
  EXPECT_NEAR(theta, s.scene.theta, 1e-3);
  EXPECT_GT(value, 0.0);
  EXPECT_THROW(grid_search_direction(A, s.scene.positions, CMatrix::Identity(4, 4), 2), std::invalid_argument);
}

TEST(Policies, SymbolLevelCachesEveryRelativePattern) {
  Bench s;
  const LinkBudget b = make_budget(5.0);
  int calls = 0;
  const SymbolLevelPolicy policy(3, 6, 4, kPi / 4, [&](const Vector& phases) {
    ++calls;
    EXPECT_DOUBLE_EQ(phases(0), kPi / 4);
    return solve_gp(build_problem(s.cs, phases, 4, b)).solution;
  });
  EXPECT_EQ(policy.pattern_count(), 16u);
  EXPECT_EQ(calls, 16);
  EXPECT_TRUE(policy.all_feasible());
  const CMatrix cov = policy.transmit_covariance();
  EXPECT_LT((cov - cov.adjoint()).norm(), 1e-12);
  EXPECT_NEAR(cov.trace().real(), policy.mean_power(), 1e-9 * policy.mean_power());

  Rng rng(4);
  const CMatrix x = policy.frame(10, rng);
  EXPECT_EQ(x.cols(), 10);
  // Every transmitted vector is a rotated cached solution, so its norm is one of the cached powers.
  for (int l = 0; l < 10; ++l) {
    bool found = false;
    for (int p1 = 0; p1 < 4 && !found; ++p1)
      for (int p2 = 0; p2 < 4 && !found; ++p2)
        found = std::abs(policy.solution({0, p1, p2}).power - x.col(l).squaredNorm()) < 1e-9 * x.col(l).squaredNorm();
    EXPECT_TRUE(found);
  }
}

TEST(Policies, SymbolLevelFrameSatisfiesCiForEverySlot) {
  Bench s;
  const LinkBudget b = make_budget(5.0);
  const SymbolLevelPolicy policy(3, 6, 4, kPi / 4,
                                 [&](const Vector& ph) { return solve_gp(build_problem(s.cs, ph, 4, b)).solution; });
  // Rebuild the frame's symbols with the same generator and check the receive points.
  for (int l = 0; l < 20; ++l) {
    Vector phases(3);
    std::vector<int> q{l % 4, (l / 4) % 4, (l * 7) % 4};
    for (int i = 0; i < 3; ++i) phases(i) = kPi / 2 * q[static_cast<std::size_t>(i)] + kPi / 4;
    const BeamformingSolution& sol = policy.solution(relative_pattern(phases, 4));
    const CVector x = sol.w * std::polar(1.0, phases(0));
    for (int i = 0; i < 3; ++i) {
      const Complex rx = (s.cs.H.col(i).transpose() * x).value() * std::polar(1.0, -phases(i));
      const double gamma = db_to_linear(5.0) * (1.0 + s.cs.F.col(i).squaredNorm());
      EXPECT_GE((rx.real() - std::sqrt(gamma)) - std::abs(rx.imag()), -1e-6);
    }
  }
}

TEST(Policies, FixedPrecoderCovariance) {
  Bench s;
  const FixedPrecoderPolicy policy(s.cs.H, 4);
  EXPECT_LT((policy.transmit_covariance() - s.cs.H * s.cs.H.adjoint()).norm(), 1e-12);
  Rng rng(1);
  const CMatrix x = policy.frame(5000, rng);
  const CMatrix emp = x * x.adjoint() / 5000.0;
  EXPECT_LT((emp - policy.transmit_covariance()).norm(), 0.1 * policy.transmit_covariance().norm());
  EXPECT_THROW(FixedPrecoderPolicy(s.cs.H, 1), std::invalid_argument);
  EXPECT_THROW(GaussianPolicy(-CMatrix::Identity(2, 2)), std::invalid_argument);
}
