#include "ciradar/radar.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace ciradar;

namespace {
CMatrix random_covariance(int m, Rng& rng, double scale = 1.0) {
  CMatrix x(m, m + 2);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (int i = 0; i < m; ++i) x(i, j) = complex_normal(rng, scale);
  return x * x.adjoint();
}
}  // namespace

TEST(Threshold, ClosedForm) {
  for (double p : {1e-4, 1e-3, 0.01, 0.05, 0.1, 0.25, 0.5}) {
    EXPECT_NEAR(detection_threshold(p), -2.0 * std::log(p), 1e-12);
    EXPECT_NEAR(false_alarm_probability(detection_threshold(p)), p, 1e-15);
  }
  EXPECT_THROW(detection_threshold(0.0), std::invalid_argument);
  EXPECT_THROW(detection_threshold(1.0), std::invalid_argument);
  EXPECT_NEAR(threshold_from_db(13.5), 22.387211385683397, 1e-9);
}

TEST(Marcum, MatchesNoncentralChiSquared) {
  for (double a : {0.0, 0.1, 0.5, 1.0, 2.0, 3.5, 5.0, 8.0, 15.0})
    for (double b : {0.01, 0.5, 1.0, 2.0, 3.0, 5.0, 9.0, 16.0}) {
      const double ref = oracle::marcum_q1_reference(a, b);
      EXPECT_NEAR(marcum_q1(a, b), ref, 1e-10 + 1e-9 * ref) << "a=" << a << " b=" << b;
    }
  EXPECT_EQ(marcum_q1(1.0, 0.0), 1.0);
  EXPECT_THROW(marcum_q1(-1.0, 1.0), std::invalid_argument);
}

// Monotone up to the series truncation level.
TEST(Marcum, MonotoneOnGrid) {
  for (double b = 0.2; b < 8.0; b += 0.4) {
    double last = 0.0;
    for (double a = 0.0; a < 8.0; a += 0.25) {
      const double q = marcum_q1(a, b);
      EXPECT_GE(q, last - 1e-12);
      last = q;
    }
  }
  for (double a = 0.0; a < 8.0; a += 0.5) {
    double last = 1.0;
    for (double b = 0.0; b < 10.0; b += 0.25) {
      const double q = marcum_q1(a, b);
      EXPECT_LE(q, last + 1e-12);
      last = q;
    }
  }
}

TEST(Detection, CentralCaseEqualsFalseAlarm) {
  for (double p : {1e-4, 0.01, 0.05, 0.3, 0.5}) EXPECT_NEAR(detection_probability(0.0, p), p, 1e-9);
}

TEST(Covariance, HermitianPsdForRandomInputs) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const ChannelSet cs = gen_channels(6, 3, 4, 10 + t);
    const CMatrix T = cs.H * 0.3;
    for (const InterferenceCovariance& c :
         {interference_covariance(cs.G, T, 1.0), interference_covariance_frame(cs.G, cs.H, 0.5),
          interference_covariance_from(cs.G, random_covariance(6, rng), 2.0)}) {
      EXPECT_LT((c.J - c.J.adjoint()).norm(), 1e-12);
      Eigen::SelfAdjointEigenSolver<CMatrix> eig(c.J);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9 * std::max(1.0, eig.eigenvalues().maxCoeff()));
      EXPECT_LT((c.J_tilde - c.J - c.sigma_r2 * CMatrix::Identity(4, 4)).norm(), 1e-12);
    }
  }
  EXPECT_THROW(make_covariance(CMatrix::Zero(2, 2), 0.0), std::invalid_argument);
}

TEST(Covariance, FixedPrecodersMatchFrameAverageOfSymbols) {
  // With QPSK symbols the per-symbol covariance averages to T T^H.
  const ChannelSet cs = gen_channels(4, 2, 3, 3);
  const CMatrix T = cs.H;
  CMatrix frame(4, 16);
  int col = 0;
  for (int q0 = 0; q0 < 4; ++q0)
    for (int q1 = 0; q1 < 4; ++q1) {
      frame.col(col++) = T.col(0) * std::polar(1.0, kPi / 2 * q0) + T.col(1) * std::polar(1.0, kPi / 2 * q1);
    }
  const auto a = interference_covariance(cs.G, T, 1.0);
  const auto b = interference_covariance_frame(cs.G, frame, 1.0);
  EXPECT_LT((a.J - b.J).norm(), 1e-10 * a.J.norm());
}

TEST(Glrt, LiteralStatistic) {
  const auto pos = ula_positions(4);
  const CMatrix A = steering_outer(0.4, pos);
  EXPECT_NEAR(glrt_statistic(A, A, CMatrix::Identity(4, 4)), 16.0, 1e-10);
  EXPECT_NEAR(detector_statistic(1.5), 3.0, 0.0);
}

TEST(Glrt, VectorizedNoncentralityMatchesTraceForm) {
  Rng rng(6);
  RadarScene scene = make_ula_scene(4, 20, WaveformMode::orthonormal, 1);
  for (int t = 0; t < 20; ++t) {
    const CMatrix Jt = make_covariance(random_covariance(4, rng, 0.5), 1.0).J_tilde;
    const double snr = db_to_linear(-5.0 + t);
    const CMatrix A = steering_outer(scene.theta, scene.positions);
    const double rho = noncentrality(snr, 1.0, A, Jt);
    const Complex alpha = alpha_for_snr(scene, snr);
    const double rho_vec = noncentrality_vectorized(alpha, scene.length(), scene.radar_power, A, Jt);
    EXPECT_NEAR(rho, rho_vec, 1e-10 * rho);
  }
}

TEST(MatchedFilter, RecoversWaveformEnergy) {
  const CMatrix s = radar_waveform(4, 12, WaveformMode::orthonormal, 4);
  const CMatrix y = matched_filter(s, s);
  EXPECT_LT((y - std::sqrt(12.0) * CMatrix::Identity(4, 4)).norm(), 1e-12);
  EXPECT_THROW(matched_filter(s, CMatrix::Zero(4, 5)), std::invalid_argument);
}

TEST(Crb, HalvesWhenSnrDoubles) {
  const RadarScene scene = make_ula_scene(4, 20, WaveformMode::orthonormal, 1);
  const CMatrix Jt = CMatrix::Identity(4, 4);
  for (double snr : {0.1, 1.0, 10.0}) {
    const double a = crb_closed_form(scene.theta, scene.positions, Jt, snr, 1.0);
    const double b = crb_closed_form(scene.theta, scene.positions, Jt, 2 * snr, 1.0);
    EXPECT_NEAR(a / b, 2.0, 1e-12);
    EXPECT_NEAR(crb(scene.theta, scene, Jt, snr).crb / crb(scene.theta, scene, Jt, 2 * snr).crb, 2.0, 1e-10);
  }
}

TEST(Crb, SchurPathMatchesClosedForm) {
  Rng rng(8);
  RadarScene scene = make_ula_scene(4, 20, WaveformMode::orthonormal, 1);
  std::uniform_real_distribution<double> angle(-1.3, 1.3);
  for (int t = 0; t < 50; ++t) {
    const double theta = angle(rng);
    scene.alpha = std::polar(1.0, angle(rng));
    const CMatrix Jt = make_covariance(random_covariance(4, rng, 0.3), 1.0).J_tilde;
    const double snr = db_to_linear(-3.0 + t * 0.4);
    const double closed = crb_closed_form(theta, scene.positions, Jt, snr, 1.0);
    const CrbReport r = crb(theta, scene, Jt, snr);
    EXPECT_NEAR(r.crb, closed, 1e-10 * closed);
    EXPECT_NEAR(r.rmse * r.rmse, r.crb, 1e-14 * r.crb);
  }
}

TEST(Crb, InterferenceFreeByDirectTraces) {
  const auto pos = ula_positions(5);
  const double theta = 0.3;
  const CMatrix A = steering_outer(theta, pos);
  const CMatrix dA = steering_derivative(theta, pos);
  const double s2 = 2.0;
  const double aa = (A * A.adjoint()).trace().real() / s2;
  const double dd = (dA * dA.adjoint()).trace().real() / s2;
  const Complex ad = (A * dA.adjoint()).trace() / s2;
  const double snr = 3.0;
  const double expected = aa / (2 * snr * s2 * (dd * aa - std::norm(ad)));
  EXPECT_NEAR(crb_closed_form(theta, pos, s2 * CMatrix::Identity(5, 5), snr, s2), expected, 1e-12 * expected);
}

TEST(Crb, DegenerateGeometryThrows) {
  const std::vector<Position> pos(3, Position(0.0, 0.0));
  EXPECT_THROW(crb_closed_form(0.2, pos, CMatrix::Identity(3, 3), 1.0, 1.0), DegenerateGeometry);
  RadarScene scene = make_ula_scene(3, 8, WaveformMode::orthonormal, 1);
  scene.positions = pos;
  EXPECT_THROW(crb(0.2, scene, CMatrix::Identity(3, 3), 1.0), DegenerateGeometry);
}

TEST(Wilson, IntervalContainsEstimate) {
  const auto [lo, hi] = wilson_interval(50, 1000);
  EXPECT_LT(lo, 0.05);
  EXPECT_GT(hi, 0.05);
  EXPECT_NEAR(hi - lo, 2 * 1.96 * std::sqrt(0.05 * 0.95 / 1000), 2e-3);
  const auto [z0, z1] = wilson_interval(0, 10);
  EXPECT_EQ(z0, 0.0);
  EXPECT_GT(z1, 0.0);
}
