#include "cfota/uplink.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace cfota {

Constellation Constellation::qam(int order) {
  int bits = 0;
  while ((1 << bits) < order) ++bits;
  if (order < 4 || (1 << bits) != order || bits % 2 != 0)
    throw ValidationError("square QAM order must be 4, 16, 64, ...");

  Constellation c;
  c.bits_per_symbol_ = bits;
  const int per_axis = 1 << (bits / 2);
  const double energy = 2.0 * (per_axis * per_axis - 1) / 3.0;
  const double a = 1.0 / std::sqrt(energy);

  c.levels_.resize(static_cast<size_t>(per_axis));
  c.labels_.resize(static_cast<size_t>(per_axis));
  for (int i = 0; i < per_axis; ++i) {
    c.levels_[static_cast<size_t>(i)] = a * (2 * i - (per_axis - 1));
    const int j = per_axis - 1 - i;  // leading label bit 0 on the positive half-axis
    c.labels_[static_cast<size_t>(i)] = j ^ (j >> 1);
  }

  c.points_.resize(static_cast<size_t>(order));
  for (int ii = 0; ii < per_axis; ++ii)
    for (int qi = 0; qi < per_axis; ++qi)
      c.points_[static_cast<size_t>(c.index_of(ii, qi))] = {c.levels_[static_cast<size_t>(ii)],
                                                            c.levels_[static_cast<size_t>(qi)]};
  return c;
}

Constellation Constellation::from_name(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (n == "qpsk" || n == "4qam" || n == "4-qam") return qam(4);
  if (n == "16qam" || n == "16-qam") return qam(16);
  throw ValidationError("unknown modulation '" + name + "'");
}

int Constellation::level_of_label(int label) const {
  for (size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return static_cast<int>(i);
  throw ValidationError("axis label out of range");
}

int Constellation::index_of(int in_phase_level, int quadrature_level) const {
  const int bpa = bits_per_axis();
  return (labels_[static_cast<size_t>(in_phase_level)] << bpa) |
         labels_[static_cast<size_t>(quadrature_level)];
}

int Constellation::in_phase_level(int index) const {
  return level_of_label(index >> bits_per_axis());
}

int Constellation::quadrature_level(int index) const {
  return level_of_label(index & ((1 << bits_per_axis()) - 1));
}

int Constellation::nearest(cdouble z) const {
  // Separable: nearest level per axis.
  auto nearest_level = [&](double v) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < levels_.size(); ++i) {
      const double d = std::abs(v - levels_[i]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  return index_of(nearest_level(z.real()), nearest_level(z.imag()));
}

SymbolFrame modulate(std::span<const std::uint8_t> bits, int K, const Constellation& cons) {
  const int bps = cons.bits_per_symbol();
  const size_t per_use = static_cast<size_t>(K) * static_cast<size_t>(bps);
  if (K < 1 || bits.size() % per_use != 0)
    throw ValidationError("bit count must be a multiple of K * log2|S|");
  const int tau = static_cast<int>(bits.size() / per_use);

  SymbolFrame f;
  f.s.resize(K, tau);
  f.bits.assign(bits.begin(), bits.end());
  f.indices.resize(static_cast<size_t>(K) * static_cast<size_t>(tau));
  size_t pos = 0;
  for (int t = 0; t < tau; ++t) {
    for (int k = 0; k < K; ++k) {
      int index = 0;
      for (int b = 0; b < bps; ++b) index = (index << 1) | (bits[pos++] & 1);
      f.indices[static_cast<size_t>(t * K + k)] = index;
      f.s(k, t) = cons.point(index);
    }
  }
  return f;
}

std::vector<std::uint8_t> demap(std::span<const int> indices, const Constellation& cons) {
  const int bps = cons.bits_per_symbol();
  std::vector<std::uint8_t> out;
  out.reserve(indices.size() * static_cast<size_t>(bps));
  for (int index : indices)
    for (int b = 0; b < bps; ++b) out.push_back(static_cast<std::uint8_t>(cons.bit(index, b)));
  return out;
}

SymbolFrame random_frame(int K, int tau, const Constellation& cons, Rng& rng) {
  std::vector<std::uint8_t> bits(static_cast<size_t>(K) * static_cast<size_t>(tau) *
                                 static_cast<size_t>(cons.bits_per_symbol()));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
  return modulate(bits, K, cons);
}

CMatrix ap_receive(const CMatrix& H_l, const CMatrix& s, double rho_ul, const CMatrix& noise) {
  CMatrix y = std::sqrt(rho_ul) * (H_l * s);
  if (noise.size() != 0) y += noise;
  return y;
}

CMatrix ap_receive(const CMatrix& H_l, const CMatrix& s, double rho_ul, Rng* rng) {
  if (rng == nullptr) return ap_receive(H_l, s, rho_ul, CMatrix());
  return ap_receive(H_l, s, rho_ul, rng->complex_normal_matrix(H_l.rows(), s.cols()));
}

LocalStatistics local_stats(const CMatrix& H_l, const CMatrix& Y_l) {
  if (H_l.rows() != Y_l.rows()) throw ValidationError("local_stats: H and y row counts differ");
  LocalStatistics out;
  out.T = H_l.adjoint() * H_l;
  out.t = H_l.adjoint() * Y_l;
  return out;
}

}  // namespace cfota
