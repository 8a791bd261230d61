#pragma once

// Monte Carlo simulation of the radar detector under BS interference.

#include "ciradar/ci_core.hpp"
#include "ciradar/qcqp.hpp"
#include "ciradar/radar.hpp"

#include <functional>
#include <map>
#include <memory>

namespace ciradar {

/// Source of BS transmit vectors seen by the radar.
class PrecodingPolicy {
 public:
  virtual ~PrecodingPolicy() = default;
  /// N x L transmitted vectors for one frame of fresh random symbols.
  virtual CMatrix frame(int length, Rng& rng) const = 0;
  /// E[x x^H]; the detector builds J = G^T E[x x^H] G^* from it.
  virtual CMatrix transmit_covariance() const = 0;
  virtual int antennas() const = 0;
};

/// Block-level precoders: x_l = sum_k t_k d_k[l] with i.i.d. PSK symbols.
class FixedPrecoderPolicy : public PrecodingPolicy {
 public:
  FixedPrecoderPolicy(CMatrix precoders, int order);
  CMatrix frame(int length, Rng& rng) const override;
  CMatrix transmit_covariance() const override;
  int antennas() const override { return static_cast<int>(precoders_.rows()); }

 private:
  CMatrix precoders_;
  int order_;
};

/// Symbol-level CI precoding: x_l = w[l] e^{j phi_1[l]} where w[l] solves the
/// CI problem for the slot's phases. The solution depends only on the phases
/// relative to the first user, so the order^(K-1) patterns are solved once.
class SymbolLevelPolicy : public PrecodingPolicy {
 public:
  /// `solver` maps a slot's phases to the CI solution for that slot.
  using Solver = std::function<BeamformingSolution(const Vector& phases)>;
  SymbolLevelPolicy(int users, int antennas, int order, double offset, const Solver& solver);
  CMatrix frame(int length, Rng& rng) const override;
  CMatrix transmit_covariance() const override;
  int antennas() const override { return antennas_; }

  /// Rotated-frame solution for a relative pattern (first entry 0).
  const BeamformingSolution& solution(const std::vector<int>& pattern) const;
  std::size_t pattern_count() const { return solutions_.size(); }
  /// True when every pattern was solved successfully.
  bool all_feasible() const { return feasible_; }
  double mean_power() const;

 private:
  int users_;
  int antennas_;
  int order_;
  double offset_;
  std::map<std::vector<int>, BeamformingSolution> solutions_;
  bool feasible_ = true;
};

/// x_l ~ CN(0, Sigma).
class GaussianPolicy : public PrecodingPolicy {
 public:
  explicit GaussianPolicy(CMatrix covariance);
  CMatrix frame(int length, Rng& rng) const override;
  CMatrix transmit_covariance() const override { return covariance_; }
  int antennas() const override { return static_cast<int>(covariance_.rows()); }

 private:
  CMatrix covariance_;
  CMatrix factor_;
};

enum class DirectionMode { known, grid };

struct DetectionConfig {
  long trials = 10000;
  double eta = 5.991464547107979;  // -2 ln 0.05
  double snr_linear = 1.0;
  bool target_present = true;
  DirectionMode direction = DirectionMode::known;
  int grid_points = 721;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct DetectionEstimate {
  long trials = 0;
  long detections = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
};

/// Simulates y_l = alpha sqrt(P_R) A(theta) s_l + G^T x_l + z_l over a frame,
/// applies the matched filter and the GLRT against the policy's covariance,
/// and counts threshold crossings of the detector statistic.
DetectionEstimate monte_carlo_detection(const RadarScene& scene, const CMatrix& G, const PrecodingPolicy& policy,
                                        const DetectionConfig& cfg);

/// Direction estimate maximizing the GLRT over a uniform grid on (-pi/2, pi/2)
/// followed by one quadratic interpolation step; also returns the maximum.
std::pair<double, double> grid_search_direction(const CMatrix& Y_tilde, std::span<const Position> positions,
                                                const CMatrix& J_tilde, int grid_points);

/// Runs fn(i) for i in [0, count) on `threads` workers. Results must not
/// depend on scheduling; callers derive per-index seeds.
void parallel_for(long count, int threads, const std::function<void(long)>& fn);

}  // namespace ciradar
