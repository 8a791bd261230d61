#include "ciradar/scene.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ciradar {

void ChannelSet::validate() const {
  const auto n = H.rows();
  const auto k = H.cols();
  const auto m = G.cols();
  if (n < 1 || k < 1) throw std::invalid_argument("channel set: H must be non-empty");
  if (G.rows() != n) throw std::invalid_argument("channel set: G must have N rows");
  if (F.rows() != m || F.cols() != k)
    throw std::invalid_argument("channel set: F must be M x K");
  if (estimate) {
    if (estimate->H.rows() != n || estimate->H.cols() != k || estimate->G.rows() != n ||
        estimate->G.cols() != m || estimate->F.rows() != m || estimate->F.cols() != k)
      throw std::invalid_argument("channel set: estimate shape mismatch");
    if (estimate->delta_h < 0 || estimate->delta_g < 0 || estimate->delta_f < 0)
      throw std::invalid_argument("channel set: negative error bound");
  }
}

ChannelSet ChannelSet::design_view() const {
  if (!estimate) return *this;
  ChannelSet view;
  view.H = estimate->H;
  view.G = estimate->G;
  view.F = estimate->F;
  view.seed = seed;
  return view;
}

namespace {
CMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix out(rows, cols);
  // Column-major fill keeps the draw order independent of Eigen internals.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = complex_normal(rng);
  return out;
}
}  // namespace

ChannelSet gen_channels(int n, int k, int m, std::uint64_t seed) {
  if (n < 1 || k < 1 || m < 0)
    throw std::invalid_argument("gen_channels: need n, k >= 1 and m >= 0");
  Rng rng(seed);
  ChannelSet cs;
  cs.H = gaussian_matrix(n, k, rng);
  cs.G = gaussian_matrix(n, m, rng);
  cs.F = gaussian_matrix(m, k, rng);
  cs.seed = seed;
  return cs;
}

CVector SymbolFrame::symbols(int l) const {
  return phases.col(l).unaryExpr([](double p) { return std::polar(1.0, p); });
}

SymbolFrame psk_frame(int k, int length, int order, std::uint64_t seed) {
  return psk_frame(k, length, order, seed, order >= 4 ? kPi / order : 0.0);
}

SymbolFrame psk_frame(int k, int length, int order, std::uint64_t seed, double offset) {
  if (order < 2) throw std::invalid_argument("psk_frame: modulation order must be >= 2");
  if (k < 1 || length < 1) throw std::invalid_argument("psk_frame: need k >= 1 and L >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<int> index(0, order - 1);
  SymbolFrame frame;
  frame.order = order;
  frame.offset = offset;
  frame.phases.resize(k, length);
  for (int l = 0; l < length; ++l)
    for (int i = 0; i < k; ++i) frame.phases(i, l) = 2.0 * kPi * index(rng) / order + offset;
  return frame;
}

std::vector<int> relative_pattern(const Vector& slot, int order) {
  std::vector<int> pattern(static_cast<std::size_t>(slot.size()));
  const double step = 2.0 * kPi / order;
  for (Eigen::Index i = 0; i < slot.size(); ++i) {
    const long q = std::lround((slot(i) - slot(0)) / step);
    pattern[static_cast<std::size_t>(i)] = static_cast<int>(((q % order) + order) % order);
  }
  return pattern;
}

std::vector<Position> ula_positions(int m, double spacing) {
  std::vector<Position> positions;
  positions.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) positions.emplace_back(i * spacing, 0.0);
  return positions;
}

CVector steering_vector(double theta, std::span<const Position> positions) {
  if (positions.empty()) throw std::invalid_argument("steering_vector: no array elements");
  const Eigen::Vector2d direction(std::sin(theta), std::cos(theta));
  CVector a(static_cast<Eigen::Index>(positions.size()));
  for (std::size_t i = 0; i < positions.size(); ++i)
    a(static_cast<Eigen::Index>(i)) = std::polar(1.0, -2.0 * kPi * direction.dot(positions[i]));
  return a;
}

CVector steering_vector_derivative(double theta, std::span<const Position> positions) {
  const CVector a = steering_vector(theta, positions);
  const Eigen::Vector2d d_direction(std::cos(theta), -std::sin(theta));
  CVector da(a.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    da(idx) = a(idx) * Complex(0.0, -2.0 * kPi * d_direction.dot(positions[i]));
  }
  return da;
}

CMatrix steering_outer(double theta, std::span<const Position> positions) {
  const CVector a = steering_vector(theta, positions);
  return a * a.transpose();
}

CMatrix steering_derivative(double theta, std::span<const Position> positions) {
  const CVector a = steering_vector(theta, positions);
  const CVector da = steering_vector_derivative(theta, positions);
  return da * a.transpose() + a * da.transpose();
}

std::vector<int> msequence(int degree) {
  // Primitive feedback taps (1-based stage indices) for x^degree + ... + 1.
  static const std::vector<std::vector<int>> taps = {
      {}, {}, {2, 1}, {3, 2}, {4, 3}, {5, 3}, {6, 5}, {7, 6}, {8, 6, 5, 4}, {9, 5}, {10, 7}, {11, 9},
      {12, 6, 4, 1}};
  if (degree < 2 || degree > 12) throw std::invalid_argument("msequence: degree must be in [2, 12]");
  const int period = (1 << degree) - 1;
  std::vector<int> state(static_cast<std::size_t>(degree), 1);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(period));
  for (int i = 0; i < period; ++i) {
    const int bit = state.back();
    out.push_back(bit == 0 ? 1 : -1);
    int feedback = 0;
    for (int t : taps[static_cast<std::size_t>(degree)]) feedback ^= state[static_cast<std::size_t>(t - 1)];
    for (int s = degree - 1; s > 0; --s) state[static_cast<std::size_t>(s)] = state[static_cast<std::size_t>(s - 1)];
    state[0] = feedback;
  }
  return out;
}

CMatrix radar_waveform(int m, int length, WaveformMode mode, std::uint64_t seed) {
  if (m < 1 || length < 1) throw std::invalid_argument("radar_waveform: need m, L >= 1");
  if (mode == WaveformMode::orthonormal) {
    if (length < m)
      throw std::invalid_argument("radar_waveform: orthonormal mode needs L >= M (got L=" +
                                  std::to_string(length) + ", M=" + std::to_string(m) + ")");
    Rng rng(seed);
    std::bernoulli_distribution coin(0.5);
    Matrix rows(length, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < length; ++i) rows(i, j) = coin(rng) ? 1.0 : -1.0;
    Eigen::HouseholderQR<Matrix> qr(rows);
    Matrix q = qr.householderQ() * Matrix::Identity(length, m);
    // Keep the sign pattern of the original rows where possible.
    const Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    for (int j = 0; j < m; ++j)
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    return (std::sqrt(static_cast<double>(length)) * q.transpose()).cast<Complex>();
  }
  int degree = 2;
  while ((1 << degree) - 1 < length) ++degree;
  const std::vector<int> seq = msequence(degree);
  const int period = static_cast<int>(seq.size());
  const int shift = std::max(1, period / m);
  CMatrix s(m, length);
  for (int row = 0; row < m; ++row)
    for (int l = 0; l < length; ++l)
      s(row, l) = static_cast<double>(seq[static_cast<std::size_t>((l + row * shift) % period)]);
  return s;
}

RadarScene make_ula_scene(int m, int length, WaveformMode mode, std::uint64_t seed) {
  RadarScene scene;
  scene.positions = ula_positions(m);
  scene.waveform = radar_waveform(m, length, mode, seed);
  return scene;
}

CVector sample_ball(int dim, double radius, Rng& rng, bool on_sphere) {
  CVector e(dim);
  for (int i = 0; i < dim; ++i) e(i) = complex_normal(rng);
  const double norm = e.norm();
  if (norm == 0.0 || radius == 0.0) return CVector::Zero(dim);
  double r = radius;
  if (!on_sphere) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    r *= std::pow(uniform(rng), 1.0 / (2.0 * dim));
  }
  return e * (r / norm);
}

ChannelSet perturb_channels(const ChannelSet& estimate, double delta_h, double delta_g,
                            double delta_f, std::uint64_t seed) {
  estimate.validate();
  if (delta_h < 0 || delta_g < 0 || delta_f < 0)
    throw std::invalid_argument("perturb_channels: error bounds must be non-negative");
  const ChannelSet base = estimate.design_view();
  Rng rng(seed);
  ChannelSet out;
  out.seed = estimate.seed;
  out.H = base.H;
  out.G = base.G;
  out.F = base.F;
  for (Eigen::Index i = 0; i < out.H.cols(); ++i)
    out.H.col(i) += sample_ball(static_cast<int>(out.H.rows()), delta_h, rng);
  for (Eigen::Index i = 0; i < out.G.cols(); ++i)
    out.G.col(i) += sample_ball(static_cast<int>(out.G.rows()), delta_g, rng);
  for (Eigen::Index i = 0; i < out.F.cols(); ++i)
    out.F.col(i) += sample_ball(static_cast<int>(out.F.rows()), delta_f, rng);
  out.estimate = ChannelEstimate{base.H, base.G, base.F, delta_h, delta_g, delta_f};
  return out;
}

}  // namespace ciradar
