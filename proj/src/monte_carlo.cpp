#include "ciradar/monte_carlo.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace ciradar {

namespace {
CVector psk_symbols(int k, int order, Rng& rng, std::vector<int>* indices = nullptr) {
  const double offset = order >= 4 ? kPi / order : 0.0;
  std::uniform_int_distribution<int> pick(0, order - 1);
  CVector d(k);
  for (int i = 0; i < k; ++i) {
    const int q = pick(rng);
    if (indices) (*indices)[static_cast<std::size_t>(i)] = q;
    d(i) = std::polar(1.0, 2.0 * kPi * q / order + offset);
  }
  return d;
}

CMatrix noise_matrix(Eigen::Index rows, Eigen::Index cols, double variance, Rng& rng) {
  CMatrix z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = complex_normal(rng, variance);
  return z;
}
}  // namespace

FixedPrecoderPolicy::FixedPrecoderPolicy(CMatrix precoders, int order)
    : precoders_(std::move(precoders)), order_(order) {
  if (order_ < 2) throw std::invalid_argument("FixedPrecoderPolicy: modulation order must be >= 2");
}

CMatrix FixedPrecoderPolicy::frame(int length, Rng& rng) const {
  CMatrix x(precoders_.rows(), length);
  for (int l = 0; l < length; ++l)
    x.col(l) = precoders_ * psk_symbols(static_cast<int>(precoders_.cols()), order_, rng);
  return x;
}

CMatrix FixedPrecoderPolicy::transmit_covariance() const { return precoders_ * precoders_.adjoint(); }

SymbolLevelPolicy::SymbolLevelPolicy(int users, int antennas, int order, double offset, const Solver& solver)
    : users_(users), antennas_(antennas), order_(order), offset_(offset) {
  if (users < 1 || order < 2) throw std::invalid_argument("SymbolLevelPolicy: need K >= 1 and order >= 2");
  long count = 1;
  for (int i = 1; i < users; ++i) count *= order;
  std::vector<int> pattern(static_cast<std::size_t>(users), 0);
  for (long idx = 0; idx < count; ++idx) {
    long rest = idx;
    for (int i = users - 1; i >= 1; --i) {
      pattern[static_cast<std::size_t>(i)] = static_cast<int>(rest % order);
      rest /= order;
    }
    Vector phases(users);
    for (int i = 0; i < users; ++i) phases(i) = 2.0 * kPi * pattern[static_cast<std::size_t>(i)] / order + offset;
    BeamformingSolution s = solver(phases);
    if (s.w.size() != antennas) throw std::invalid_argument("SymbolLevelPolicy: solver returned wrong dimension");
    if (!s.w.allFinite()) feasible_ = false;
    solutions_.emplace(pattern, std::move(s));
  }
}

const BeamformingSolution& SymbolLevelPolicy::solution(const std::vector<int>& pattern) const {
  auto it = solutions_.find(pattern);
  if (it == solutions_.end()) throw std::out_of_range("SymbolLevelPolicy: unknown symbol pattern");
  return it->second;
}

CMatrix SymbolLevelPolicy::frame(int length, Rng& rng) const {
  CMatrix x(antennas_, length);
  std::vector<int> q(static_cast<std::size_t>(users_));
  std::vector<int> pattern(static_cast<std::size_t>(users_));
  for (int l = 0; l < length; ++l) {
    psk_symbols(users_, order_, rng, &q);
    for (int i = 0; i < users_; ++i)
      pattern[static_cast<std::size_t>(i)] = ((q[static_cast<std::size_t>(i)] - q[0]) % order_ + order_) % order_;
    const double phi1 = 2.0 * kPi * q[0] / order_ + offset_;
    x.col(l) = solution(pattern).w * std::polar(1.0, phi1);
  }
  return x;
}

CMatrix SymbolLevelPolicy::transmit_covariance() const {
  CMatrix cov = CMatrix::Zero(antennas_, antennas_);
  for (const auto& [pattern, s] : solutions_) cov += s.w * s.w.adjoint();
  return cov / static_cast<double>(solutions_.size());
}

double SymbolLevelPolicy::mean_power() const {
  double total = 0.0;
  for (const auto& [pattern, s] : solutions_) total += s.power;
  return total / static_cast<double>(solutions_.size());
}

GaussianPolicy::GaussianPolicy(CMatrix covariance) : covariance_(std::move(covariance)) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(covariance_);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff()))
    throw std::invalid_argument("GaussianPolicy: covariance must be Hermitian PSD");
  factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

CMatrix GaussianPolicy::frame(int length, Rng& rng) const {
  return factor_ * noise_matrix(covariance_.rows(), length, 1.0, rng);
}

namespace {
struct Template {
  CMatrix jinv_a;  // J~^{-1} A(theta)
  double den = 0.0;
};

Template make_template(double theta, std::span<const Position> positions, const Eigen::LLT<CMatrix>& llt) {
  const CMatrix A = steering_outer(theta, positions);
  Template t;
  t.jinv_a = llt.solve(A);
  t.den = (t.jinv_a.conjugate().cwiseProduct(A)).sum().real();
  return t;
}

double statistic(const CMatrix& Y, const Template& t) {
  return std::norm((t.jinv_a.conjugate().cwiseProduct(Y)).sum()) / t.den;
}
}  // namespace

std::pair<double, double> grid_search_direction(const CMatrix& Y_tilde, std::span<const Position> positions,
                                                const CMatrix& J_tilde, int grid_points) {
  if (grid_points < 3) throw std::invalid_argument("grid_search_direction: need at least 3 grid points");
  Eigen::LLT<CMatrix> llt(J_tilde);
  const double h = kPi / (grid_points - 1);
  std::vector<double> values(static_cast<std::size_t>(grid_points));
  int best = 0;
  for (int g = 0; g < grid_points; ++g) {
    values[static_cast<std::size_t>(g)] = statistic(Y_tilde, make_template(-kPi / 2 + g * h, positions, llt));
    if (values[static_cast<std::size_t>(g)] > values[static_cast<std::size_t>(best)]) best = g;
  }
  double theta = -kPi / 2 + best * h;
  double value = values[static_cast<std::size_t>(best)];
  if (best > 0 && best < grid_points - 1) {
    const double fm = values[static_cast<std::size_t>(best - 1)];
    const double f0 = value;
    const double fp = values[static_cast<std::size_t>(best + 1)];
    const double curv = fm - 2.0 * f0 + fp;
    if (curv < 0.0) {
      const double refined = theta + 0.5 * h * (fm - fp) / curv;
      const double v = statistic(Y_tilde, make_template(refined, positions, llt));
      if (v > value) {
        theta = refined;
        value = v;
      }
    }
  }
  return {theta, value};
}

void parallel_for(long count, int threads, const std::function<void(long)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<long>(threads, count));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

DetectionEstimate monte_carlo_detection(const RadarScene& scene, const CMatrix& G, const PrecodingPolicy& policy,
                                        const DetectionConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("monte_carlo_detection: need at least one trial");
  const int m = scene.antennas();
  const int length = scene.length();
  if (G.cols() != m || G.rows() != policy.antennas())
    throw std::invalid_argument("monte_carlo_detection: G must be N x M");
  const InterferenceCovariance cov = interference_covariance_from(G, policy.transmit_covariance(), scene.sigma_r2);
  Eigen::LLT<CMatrix> llt(cov.J_tilde);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("monte_carlo_detection: J~ not positive definite");
  const Template known = make_template(scene.theta, scene.positions, llt);
  const Complex alpha = cfg.target_present ? alpha_for_snr(scene, cfg.snr_linear) : Complex(0.0, 0.0);
  const CMatrix echo = alpha * std::sqrt(scene.radar_power) * steering_outer(scene.theta, scene.positions) * scene.waveform;
  const CMatrix Gt = G.transpose();

  std::vector<char> hits(static_cast<std::size_t>(cfg.trials), 0);
  parallel_for(cfg.trials, cfg.threads, [&](long trial) {
    Rng rng(derive_seed(cfg.seed, 0x6d63u, static_cast<std::uint64_t>(trial)));
    const CMatrix x = policy.frame(length, rng);
    CMatrix y = Gt * x + noise_matrix(m, length, scene.sigma_r2, rng);
    if (cfg.target_present) y += echo;
    const CMatrix Y = matched_filter(y, scene.waveform);
    double t = 0.0;
    if (cfg.direction == DirectionMode::known) {
      t = statistic(Y, known);
    } else {
      t = grid_search_direction(Y, scene.positions, cov.J_tilde, cfg.grid_points).second;
    }
    hits[static_cast<std::size_t>(trial)] = detector_statistic(t) > cfg.eta ? 1 : 0;
  });

  DetectionEstimate est;
  est.trials = cfg.trials;
  for (char h : hits) est.detections += h;
  est.rate = static_cast<double>(est.detections) / static_cast<double>(est.trials);
  std::tie(est.ci_low, est.ci_high) = wilson_interval(est.detections, est.trials);
  return est;
}

}  // namespace ciradar
