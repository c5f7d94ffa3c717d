#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "cfota/types.hpp"

namespace cfota {

/// Independent random streams inside one Monte Carlo trial. Each draw site
/// owns a stream so that changing how much one site consumes never shifts
/// the others.
enum class Stream : std::uint64_t {
  kLayout = 1,
  kUeChannel = 2,
  kBits = 3,
  kApNoise = 4,
  kFronthaulChannel = 5,
  kFronthaulNoise = 6,
  kOracle = 7,
};

/// SplitMix64 finalizer, used to derive well-separated seeds from keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hash an ordered key tuple into one 64-bit seed.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (std::uint64_t k : key) h = mix64(h ^ mix64(k));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Counter-based substream keyed by (master seed, experiment, trial, site).
  static Rng substream(std::uint64_t master, std::uint64_t experiment, std::uint64_t trial,
                       Stream site) {
    return Rng(derive_seed({master, experiment, trial, static_cast<std::uint64_t>(site)}));
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return normal_(engine_); }
  std::uint64_t bits() { return engine_(); }
  int bit() { return static_cast<int>(engine_() >> 63); }

  /// Circularly symmetric complex Gaussian with the given total variance.
  cdouble complex_normal(double variance = 1.0) {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  /// rows x cols matrix of i.i.d. CN(0, variance) entries.
  CMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, double variance = 1.0) {
    CMatrix out(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = complex_normal(variance);
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace cfota
