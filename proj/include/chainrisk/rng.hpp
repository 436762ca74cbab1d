#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace chainrisk {

/// SplitMix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

/// Derives an independent substream seed from (master seed, stream index).
/// Trial-level streams depend only on these two values, so Monte-Carlo
/// results are identical for any worker count.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t stream) {
  return mix64(mix64(master + 0x9E3779B97F4A7C15ULL * (stream + 1)) ^
               0xD1B54A32D192ED03ULL);
}

/// Counter-based generator: state advances by the golden-ratio increment and
/// the output is a mix of the counter, so jumping to any position is O(1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform on (0, 1), both endpoints excluded.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  /// Standard normal via Box-Muller (cosine branch).
  double gaussian() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Standard Laplace: density exp(-|x|)/2. Its psi_1-Orlicz norm is exactly 2.
  double laplace() {
    const double v = uniform_open();
    return v < 0.5 ? std::log(2.0 * v) : -std::log(2.0 * (1.0 - v));
  }

  /// Uniform point in the d-dimensional Euclidean unit ball.
  Eigen::VectorXd uniform_in_ball(int d) {
    Eigen::VectorXd g(d);
    double norm = 0.0;
    do {
      for (int j = 0; j < d; ++j) g[j] = gaussian();
      norm = g.norm();
    } while (norm == 0.0);
    const double radius = std::pow(uniform_pos(), 1.0 / d);
    return g * (radius / norm);
  }

 private:
  std::uint64_t state_;
};

}  // namespace chainrisk
