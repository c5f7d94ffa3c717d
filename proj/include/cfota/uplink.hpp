#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfota/random.hpp"
#include "cfota/types.hpp"

namespace cfota {

/// Square Gray-mapped QAM with unit average energy.
///
/// Each symbol carries bits_per_symbol bits; the first half select the
/// in-phase level, the second half the quadrature level. Per axis the
/// Gray-coded bit group maps to a PAM level, and bit value 0 selects the
/// positive half-axis for the leading bit. For 4-QAM:
///
///   00 -> (+1 + j)/sqrt2    01 -> (+1 - j)/sqrt2
///   10 -> (-1 + j)/sqrt2    11 -> (-1 - j)/sqrt2
class Constellation {
 public:
  static Constellation qam(int order);
  /// "qpsk", "4qam" or "16qam".
  static Constellation from_name(const std::string& name);

  int order() const { return static_cast<int>(points_.size()); }
  int bits_per_symbol() const { return bits_per_symbol_; }
  int bits_per_axis() const { return bits_per_symbol_ / 2; }
  const std::vector<cdouble>& points() const { return points_; }
  /// Point index is the bit label read MSB first.
  cdouble point(int index) const { return points_[static_cast<size_t>(index)]; }
  int bit(int index, int b) const { return (index >> (bits_per_symbol_ - 1 - b)) & 1; }

  /// PAM levels of one axis (ascending) and the Gray label of each level.
  const std::vector<double>& axis_levels() const { return levels_; }
  int axis_label(int level_index) const { return labels_[static_cast<size_t>(level_index)]; }
  /// Index of the axis level whose Gray label equals `label`.
  int level_of_label(int label) const;
  int index_of(int in_phase_level, int quadrature_level) const;
  int in_phase_level(int index) const;
  int quadrature_level(int index) const;

  /// Nearest constellation point index (minimum Euclidean distance).
  int nearest(cdouble z) const;

 private:
  int bits_per_symbol_ = 0;
  std::vector<cdouble> points_;
  std::vector<double> levels_;
  std::vector<int> labels_;
};

/// Symbols of one block: s(:, t) is the K-vector sent in channel use t.
struct SymbolFrame {
  CMatrix s;                      // K x tau_u
  std::vector<std::uint8_t> bits; // per channel use, per user, MSB first
  std::vector<int> indices;       // symbol index, column-major (k fastest)
};

/// Maps bits (t-major, then user, then MSB-first bit) to a K x tau frame.
/// Throws ValidationError unless bits.size() is a multiple of K * log2|S|.
SymbolFrame modulate(std::span<const std::uint8_t> bits, int K, const Constellation& cons);
/// Inverse of modulate for hard symbol indices.
std::vector<std::uint8_t> demap(std::span<const int> indices, const Constellation& cons);

SymbolFrame random_frame(int K, int tau, const Constellation& cons, Rng& rng);

/// y_l = sqrt(rho_ul) H_l s + n_l for every column of s; noise is drawn
/// from rng (CN(0, I_N)). Pass rng = nullptr for the noiseless output.
CMatrix ap_receive(const CMatrix& H_l, const CMatrix& s, double rho_ul, Rng* rng);
/// Same with a pre-drawn unit-variance noise matrix (N x tau).
CMatrix ap_receive(const CMatrix& H_l, const CMatrix& s, double rho_ul, const CMatrix& noise);

/// Per-AP sufficient statistics: Gramian T_l = H_l^H H_l and matched filter
/// outputs t_{l,t} = H_l^H y_{l,t} (columns of t).
struct LocalStatistics {
  CMatrix T;  // K x K
  CMatrix t;  // K x tau_u
};

LocalStatistics local_stats(const CMatrix& H_l, const CMatrix& Y_l);

}  // namespace cfota
