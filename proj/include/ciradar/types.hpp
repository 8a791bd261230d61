#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace ciradar {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

using Rng = std::mt19937_64;

inline constexpr double kPi = std::numbers::pi;

/// Power ratio in decibels.
struct Decibels {
  double value = 0.0;
  double linear() const;
};

/// Absolute power in dBm (0 dBm = 1 mW).
struct Dbm {
  double value = 0.0;
  double milliwatts() const;
};

double db_to_linear(double db);
double linear_to_db(double linear);
double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

/// SplitMix64 mix of a base seed with a stream identifier. Used to derive
/// independent per-draw and per-trial seeds that do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

/// Draw from CN(0, variance).
Complex complex_normal(Rng& rng, double variance = 1.0);

}  // namespace ciradar
