#include "ciradar/radar.hpp"

#include <cmath>
#include <limits>

namespace ciradar {

CMatrix matched_filter(const CMatrix& received, const CMatrix& waveform) {
  if (received.cols() != waveform.cols() || received.cols() == 0)
    throw std::invalid_argument("matched_filter: frame and waveform lengths differ");
  return received * waveform.adjoint() / std::sqrt(static_cast<double>(waveform.cols()));
}

InterferenceCovariance make_covariance(const CMatrix& J, double sigma_r2) {
  if (!(sigma_r2 > 0.0)) throw std::invalid_argument("interference covariance: sigma_R^2 must be positive");
  InterferenceCovariance out;
  // Symmetrize away rounding so downstream factorizations see a Hermitian matrix.
  out.J = 0.5 * (J + J.adjoint());
  out.J_tilde = out.J;
  out.J_tilde.diagonal().array() += sigma_r2;
  out.sigma_r2 = sigma_r2;
  return out;
}

InterferenceCovariance interference_covariance(const CMatrix& G, const CMatrix& precoders, double sigma_r2) {
  const CMatrix gt = G.transpose() * precoders;
  return make_covariance(gt * gt.adjoint(), sigma_r2);
}

InterferenceCovariance interference_covariance_frame(const CMatrix& G, const CMatrix& transmit, double sigma_r2) {
  if (transmit.cols() == 0) throw std::invalid_argument("interference_covariance_frame: empty frame");
  const CMatrix gt = G.transpose() * transmit;
  return make_covariance(gt * gt.adjoint() / static_cast<double>(transmit.cols()), sigma_r2);
}

InterferenceCovariance interference_covariance_from(const CMatrix& G, const CMatrix& transmit_cov,
                                                    double sigma_r2) {
  return make_covariance(G.transpose() * transmit_cov * G.conjugate(), sigma_r2);
}

double glrt_statistic(const CMatrix& Y_tilde, const CMatrix& A, const CMatrix& J_tilde) {
  Eigen::LLT<CMatrix> llt(J_tilde);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("glrt_statistic: J~ is not positive definite");
  const CMatrix Jinv_A = llt.solve(A);       // J~^{-1} A
  // tr(Y A^H J^-1) = tr(A^H J^-1 Y) = sum conj(J^-1 A) .* Y
  const Complex num = (Jinv_A.conjugate().cwiseProduct(Y_tilde)).sum();
  const double den = (Jinv_A.conjugate().cwiseProduct(A)).sum().real();
  return std::norm(num) / den;
}

double detection_threshold(double p_fa) {
  if (!(p_fa > 0.0 && p_fa < 1.0)) throw std::invalid_argument("detection_threshold: P_FA must lie in (0, 1)");
  return -2.0 * std::log(p_fa);
}

double threshold_from_db(double eta_db) { return db_to_linear(eta_db); }

double false_alarm_probability(double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("false_alarm_probability: threshold must be non-negative");
  return std::exp(-0.5 * eta);
}

double noncentrality(double snr_linear, double sigma_r2, const CMatrix& A, const CMatrix& J_tilde) {
  Eigen::LLT<CMatrix> llt(J_tilde);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("noncentrality: J~ is not positive definite");
  // tr(A A^H J^-1) = tr(A^H J^-1 A)
  const double tr = (A.adjoint() * llt.solve(A)).trace().real();
  return 2.0 * snr_linear * sigma_r2 * tr;
}

double noncentrality_vectorized(Complex alpha, int length, double radar_power, const CMatrix& A,
                                const CMatrix& J_tilde) {
  const auto m = A.rows();
  CMatrix C = CMatrix::Zero(m * m, m * m);
  for (Eigen::Index b = 0; b < m; ++b) C.block(b * m, b * m, m, m) = J_tilde;
  const CVector d = A.reshaped();
  const Complex q = d.dot(C.partialPivLu().solve(d));
  return 2.0 * std::norm(alpha) * length * radar_power * q.real();
}

double marcum_q1(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw std::invalid_argument("marcum_q1: arguments must be non-negative");
  const double mu = 0.5 * a * a;  // Poisson mean of the mixture index
  const double x = 0.5 * b * b;   // threshold on the Erlang scale
  if (x == 0.0) return 1.0;
  // Q = sum_j Pois(j; mu) P(Pois(x) <= j)
  const double log_mu = mu > 0.0 ? std::log(mu) : -std::numeric_limits<double>::infinity();
  const double log_x = std::log(x);
  double cdf = std::exp(-x);  // P(Pois(x) <= 0)
  double sum = 0.0;
  const long max_terms = static_cast<long>(mu + 60.0 * std::sqrt(mu + 1.0) + 200.0);
  for (long j = 0; j <= max_terms; ++j) {
    if (j > 0) cdf += std::exp(-x + j * log_x - std::lgamma(static_cast<double>(j) + 1.0));
    cdf = std::min(cdf, 1.0);
    const double log_w = mu > 0.0 ? -mu + j * log_mu - std::lgamma(static_cast<double>(j) + 1.0)
                                  : (j == 0 ? 0.0 : -std::numeric_limits<double>::infinity());
    const double term = std::exp(log_w) * cdf;
    sum += term;
    if (j > mu && std::exp(log_w) < 1e-12 * sum) break;
  }
  return std::min(sum, 1.0);
}

double detection_probability_at(double rho, double eta) {
  if (!(rho >= 0.0)) throw std::invalid_argument("detection_probability: rho must be non-negative");
  return marcum_q1(std::sqrt(rho), std::sqrt(eta));
}

double detection_probability(double rho, double p_fa) {
  return detection_probability_at(rho, detection_threshold(p_fa));
}

Complex alpha_for_snr(const RadarScene& scene, double snr_linear) {
  const double mag = std::sqrt(snr_linear * scene.sigma_r2 / (scene.length() * scene.radar_power));
  const double phase = std::abs(scene.alpha) > 0.0 ? std::arg(scene.alpha) : 0.0;
  return std::polar(mag, phase);
}

namespace {
struct Traces {
  double aa;   // tr(A A^H J^-1)
  double dd;   // tr(dA dA^H J^-1)
  Complex ad;  // tr(A dA^H J^-1)
};

Traces traces(double theta, std::span<const Position> positions, const CMatrix& J_tilde) {
  const CMatrix A = steering_outer(theta, positions);
  const CMatrix dA = steering_derivative(theta, positions);
  Eigen::LLT<CMatrix> llt(J_tilde);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("crb: J~ is not positive definite");
  const CMatrix Ji_A = llt.solve(A);
  const CMatrix Ji_dA = llt.solve(dA);
  Traces t;
  t.aa = (A.adjoint() * Ji_A).trace().real();
  t.dd = (dA.adjoint() * Ji_dA).trace().real();
  t.ad = (dA.adjoint() * Ji_A).trace();  // tr(dA^H J^-1 A) = tr(A dA^H J^-1)
  return t;
}
}  // namespace

double crb_closed_form(double theta, std::span<const Position> positions, const CMatrix& J_tilde,
                       double snr_linear, double sigma_r2) {
  const Traces t = traces(theta, positions, J_tilde);
  const double den = t.dd * t.aa - std::norm(t.ad);
  if (!(den > 1e-12 * std::max(1.0, t.dd * t.aa)))
    throw DegenerateGeometry("crb: Fisher information for theta vanishes (degenerate array geometry)");
  return t.aa / (2.0 * snr_linear * sigma_r2 * den);
}

CrbReport crb(double theta, const RadarScene& scene, const CMatrix& J_tilde, double snr_linear) {
  if (!(snr_linear > 0.0)) throw std::invalid_argument("crb: SNR must be positive");
  const Traces t = traces(theta, scene.positions, J_tilde);
  const Complex alpha = alpha_for_snr(scene, snr_linear);
  const double lp = scene.length() * scene.radar_power;
  CrbReport r;
  r.xi_tt = 2.0 * std::norm(alpha) * lp * t.dd;
  r.xi_aa = 2.0 * lp * t.aa * Eigen::Matrix2d::Identity();
  const Complex z = std::conj(alpha) * t.ad;
  r.xi_ta << 2.0 * lp * z.real(), 2.0 * lp * (z * Complex(0.0, 1.0)).real();
  const double schur = r.xi_tt - r.xi_ta.dot(r.xi_aa.inverse() * r.xi_ta);
  if (!(schur > 1e-12 * std::max(1.0, r.xi_tt)))
    throw DegenerateGeometry("crb: Fisher information for theta vanishes (degenerate array geometry)");
  r.crb = 1.0 / schur;
  r.rmse = std::sqrt(r.crb);
  return r;
}

std::pair<double, double> wilson_interval(long successes, long trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace ciradar
