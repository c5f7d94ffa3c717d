#pragma once

#include <vector>

#include "cfota/random.hpp"
#include "cfota/types.hpp"
#include "cfota/uplink.hpp"

namespace cfota {

/// Length of the packed upper triangle of a K x K Hermitian matrix.
constexpr int packed_gramian_length(int K) { return K * (K + 1) / 2; }

/// Zero-based position of entry (row, col), row <= col, of the upper
/// triangle in the row-wise packing [T00, T01, ..., T0K-1, T11, ...].
constexpr int packed_index(int K, int row, int col) {
  return row * K - row * (row - 1) / 2 + (col - row);
}

/// Number of fronthaul channel uses needed for `length` symbols over M
/// antennas, ceil(length / M).
constexpr int chunk_count(int length, int M) { return (length + M - 1) / M; }

struct PackedVector {
  Phase phase = Phase::kGramian;
  CVector x;
};

/// Phase 1: row-wise upper triangle of T_l. Phase 2: [t_{l,1}; ...; t_{l,tau}].
PackedVector pack(const LocalStatistics& stats, Phase phase);
/// Row-wise upper triangle of a K x K matrix.
CVector pack_upper(const CMatrix& T);
/// Stack the columns of a K x tau matrix.
CVector pack_columns(const CMatrix& t);

/// Column m holds entries [mM, (m+1)M) of x; the tail is zero padded.
CMatrix chunk(const CVector& x, int M);
/// Inverse of chunk: the first `length` entries in column order.
CVector unchunk(const CMatrix& X, int length);

/// Local ZF precoder W_l = G_l (G_l^H G_l)^{-1}, so that G_l^H W_l = I_M.
/// Throws SingularMatrixError when cond(G_l) exceeds 1e12 (i.e. the Gram
/// matrix condition exceeds 1e24, or G_l loses column rank).
CMatrix zf_precoder(const CMatrix& G_l);

/// E[W^H W] = E[(G^H G)^{-1}] = I_M / (gain (N - M)) for i.i.d. CN(0, gain)
/// entries (complex inverse-Wishart mean). N == M throws ValidationError:
/// the mean does not exist.
CMatrix expected_precoder_gram(double gain, int N, int M);

/// Monte Carlo estimate of E[W^H W] for i.i.d. CN(0, gain) G.
CMatrix expected_precoder_gram_mc(double gain, int N, int M, int draws, Rng& rng);

/// Energy spent by one AP over a phase:
///   Omega = rho_c trace((I_{M_i} kron EWW) E[x x^H]),
/// where second_moment is E[x x^H] of the unpadded packed vector. Padding
/// positions carry no energy.
double phase_energy(const CMatrix& second_moment, const CMatrix& EWW, double rho_c);
/// Phase-2 energy when E[x x^H] is block diagonal with tau identical K x K
/// blocks (uncorrelated channel uses); avoids forming the tau K square matrix.
double phase_energy_blocks(const CMatrix& block, int tau, const CMatrix& EWW, double rho_c);

/// Average transmit power P = Omega / M_i.
inline double phase_power(double energy, int chunks) { return energy / chunks; }

/// Common scaling factor broadcast by the CPU: P_max / max_l P_l, computed
/// from powers reported with rho_c = 1. Applies both when some AP violates
/// the budget (scale down) and when none does (scale up to the boundary).
/// Throws ValidationError when all powers are zero or P_max <= 0.
double scale_factor(const std::vector<double>& powers, double p_max);

/// CPU observation of one phase:
///   Z = sum_l sqrt(rho_c) G_l^H W_l Xbar_l + E,
/// where E is the unit-variance noise (M x M_i), drawn by the caller.
CMatrix ota_transmit(const std::vector<CMatrix>& frames, const std::vector<CMatrix>& precoders,
                     const std::vector<CMatrix>& channels, double rho_c, const CMatrix& noise);
/// Overload drawing E from rng (nullptr: noiseless).
CMatrix ota_transmit(const std::vector<CMatrix>& frames, const std::vector<CMatrix>& precoders,
                     const std::vector<CMatrix>& channels, double rho_c, Rng* rng);

}  // namespace cfota
