#pragma once

// Radar-side metrics: matched filter, interference covariance, GLRT detection
// and the DoA Cramer-Rao bound.

#include "ciradar/scene.hpp"

#include <stdexcept>
#include <vector>

namespace ciradar {

/// Y~ = (1/sqrt(L)) Y S^H for received frames Y (M x L) and waveform S (M x L).
CMatrix matched_filter(const CMatrix& received, const CMatrix& waveform);

struct InterferenceCovariance {
  CMatrix J;        // M x M, Hermitian PSD
  CMatrix J_tilde;  // J + sigma_R^2 I
  double sigma_r2 = 1.0;
};

InterferenceCovariance make_covariance(const CMatrix& J, double sigma_r2);

/// G^T (sum_k t_k t_k^H) G^* for fixed precoders T = [t_1 ... t_K].
InterferenceCovariance interference_covariance(const CMatrix& G, const CMatrix& precoders, double sigma_r2);
/// (1/L) sum_l G^T w[l] w[l]^H G^* for per-slot transmit vectors W = [w[1] ... w[L]].
InterferenceCovariance interference_covariance_frame(const CMatrix& G, const CMatrix& transmit, double sigma_r2);
/// G^T Sigma G^* for a transmit covariance Sigma.
InterferenceCovariance interference_covariance_from(const CMatrix& G, const CMatrix& transmit_cov,
                                                    double sigma_r2);

/// |tr(Y~ A^H J~^{-1})|^2 / tr(A A^H J~^{-1}).
double glrt_statistic(const CMatrix& Y_tilde, const CMatrix& A, const CMatrix& J_tilde);

/// With complex Gaussian noise the statistic above is exponential with unit
/// mean under H0; twice it is chi-squared with two degrees of freedom, which is
/// the quantity compared against the threshold.
inline double detector_statistic(double glrt) { return 2.0 * glrt; }

/// eta = inverse chi-squared(2) CDF at 1 - P_FA = -2 ln P_FA.
double detection_threshold(double p_fa);
/// Threshold given as 10 log10(eta).
double threshold_from_db(double eta_db);
/// P_FA implied by a threshold: exp(-eta / 2).
double false_alarm_probability(double eta);

/// rho = 2 SNR_R sigma_R^2 tr(A A^H J~^{-1}), the noncentrality of the
/// chi-squared(2) law of detector_statistic under H1.
double noncentrality(double snr_linear, double sigma_r2, const CMatrix& A, const CMatrix& J_tilde);
/// Same quantity from 2 |alpha|^2 L P_R vec(A)^H C^{-1} vec(A) with the
/// block-diagonal covariance C = I_M (x) J~ formed explicitly.
double noncentrality_vectorized(Complex alpha, int length, double radar_power, const CMatrix& A,
                                const CMatrix& J_tilde);

/// Marcum Q_1(a, b) = P(chi-squared_2(a^2) > b^2), Poisson-mixture series
/// truncated when the relative term size falls below 1e-12.
double marcum_q1(double a, double b);
/// P_D = Q_1(sqrt(rho), sqrt(eta)).
double detection_probability_at(double rho, double eta);
double detection_probability(double rho, double p_fa);

class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CrbReport {
  double crb = 0.0;
  double rmse = 0.0;
  double xi_tt = 0.0;
  Eigen::Vector2d xi_ta = Eigen::Vector2d::Zero();
  Eigen::Matrix2d xi_aa = Eigen::Matrix2d::Zero();
};

/// CRB(theta) for a scene and interference covariance; the path loss magnitude
/// is set from SNR_R = |alpha|^2 L P_R / sigma_R^2, its phase from the scene.
/// Throws DegenerateGeometry when the closed-form denominator vanishes.
CrbReport crb(double theta, const RadarScene& scene, const CMatrix& J_tilde, double snr_linear);

/// Closed form 1 / (2 SNR sigma^2) * tr(AA^H J~^-1) / (tr(dA dA^H J~^-1) tr(AA^H J~^-1) - |tr(A dA^H J~^-1)|^2).
double crb_closed_form(double theta, std::span<const Position> positions, const CMatrix& J_tilde,
                       double snr_linear, double sigma_r2);

/// Path loss with the scene's phase and the magnitude implied by SNR_R.
Complex alpha_for_snr(const RadarScene& scene, double snr_linear);

/// Wilson score interval for k successes in n trials.
std::pair<double, double> wilson_interval(long successes, long trials, double z = 1.959963984540054);

}  // namespace ciradar
