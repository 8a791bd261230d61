#pragma once

// Channels, PSK frames, radar array geometry and waveforms.

#include "ciradar/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace ciradar {

/// Estimated channels and the radii of the error balls around them.
struct ChannelEstimate {
  CMatrix H;
  CMatrix G;
  CMatrix F;
  double delta_h = 0.0;
  double delta_g = 0.0;
  double delta_f = 0.0;
};

/// Downlink channel H (N x K, columns h_i), BS-to-radar channel G (N x M,
/// columns g_m) and radar-to-user channel F (M x K, columns f_i). When the set
/// was produced by perturb_channels the estimates and error radii are kept
/// alongside the true channels.
struct ChannelSet {
  CMatrix H;
  CMatrix G;
  CMatrix F;
  std::uint64_t seed = 0;
  std::optional<ChannelEstimate> estimate;

  int bs_antennas() const { return static_cast<int>(H.rows()); }
  int users() const { return static_cast<int>(H.cols()); }
  int radar_antennas() const { return static_cast<int>(G.cols()); }

  /// Throws std::invalid_argument when the matrix shapes disagree.
  void validate() const;

  /// The channels the transmitter designs against: the estimates when present,
  /// otherwise the true channels.
  ChannelSet design_view() const;
};

/// i.i.d. CN(0, 1) entries; deterministic in `seed`.
ChannelSet gen_channels(int n, int k, int m, std::uint64_t seed);

struct SymbolFrame {
  Matrix phases;  // K x L, radians
  int order = 4;
  double offset = 0.0;

  int users() const { return static_cast<int>(phases.rows()); }
  int length() const { return static_cast<int>(phases.cols()); }
  double half_angle() const { return kPi / order; }
  Vector slot(int l) const { return phases.col(l); }
  CVector symbols(int l) const;
};

/// Uniform i.i.d. M_p-PSK phases 2*pi*q/order + offset. The default offset is
/// pi/order for order >= 4 (QPSK at odd multiples of pi/4) and 0 for BPSK.
SymbolFrame psk_frame(int k, int length, int order, std::uint64_t seed);
SymbolFrame psk_frame(int k, int length, int order, std::uint64_t seed, double offset);

/// Constellation index of each phase in `slot`, relative to the first user.
std::vector<int> relative_pattern(const Vector& slot, int order);

using Position = Eigen::Vector2d;

/// Element positions in wavelengths; x_i = [(i-1) * spacing; 0].
std::vector<Position> ula_positions(int m, double spacing = 0.5);

/// a_i(theta) = exp(-j 2 pi [sin theta; cos theta]^T x_i).
CVector steering_vector(double theta, std::span<const Position> positions);
CVector steering_vector_derivative(double theta, std::span<const Position> positions);

/// A(theta) = a(theta) a(theta)^T (plain transpose).
CMatrix steering_outer(double theta, std::span<const Position> positions);
/// dA/dtheta = a' a^T + a a'^T.
CMatrix steering_derivative(double theta, std::span<const Position> positions);

enum class WaveformMode { orthonormal, msequence };

/// M x L radar waveform. Orthonormal mode satisfies (1/L) S S^H = I to
/// rounding; msequence mode uses cyclic shifts of a maximal-length LFSR
/// sequence truncated to L and is only approximately orthogonal.
CMatrix radar_waveform(int m, int length, WaveformMode mode, std::uint64_t seed);

/// Maximal-length +/-1 sequence of length 2^degree - 1 (degree 2..12).
std::vector<int> msequence(int degree);

struct RadarScene {
  std::vector<Position> positions;
  double theta = kPi / 5.0;
  Complex alpha{1.0, 0.0};
  double radar_power = 1.0;  // mW
  CMatrix waveform;          // M x L
  double sigma_c2 = 1.0;     // mW
  double sigma_r2 = 1.0;     // mW

  int antennas() const { return static_cast<int>(positions.size()); }
  int length() const { return static_cast<int>(waveform.cols()); }
};

/// ULA scene with half-wavelength spacing and the given waveform.
RadarScene make_ula_scene(int m, int length, WaveformMode mode, std::uint64_t seed);

/// Uniform sample from the complex ball {e in C^dim : ||e|| <= radius}, or from
/// its boundary sphere when `on_sphere` is set.
CVector sample_ball(int dim, double radius, Rng& rng, bool on_sphere = false);

/// Treats `estimate` as the transmitter's channel knowledge and draws true
/// channels uniformly inside the error balls around each column.
ChannelSet perturb_channels(const ChannelSet& estimate, double delta_h, double delta_g,
                            double delta_f, std::uint64_t seed);

}  // namespace ciradar
