#pragma once

#include <cstdint>
#include <vector>

#include "cfota/geometry.hpp"
#include "cfota/random.hpp"
#include "cfota/types.hpp"

namespace cfota {

/// One coherence block: UE->AP channels H_l (N x K) and AP->CPU channels
/// G_l (N x M; the CPU sees G_l^H).
struct ChannelBlock {
  std::vector<CMatrix> H;
  std::vector<CMatrix> G;
  std::int64_t block_index = 0;
};

/// Hermitian PSD square root via eigendecomposition. Eigenvalues in
/// [-tol * max|lambda|, 0) are clipped to zero; anything more negative is
/// rejected with ValidationError.
CMatrix psd_sqrt(const CMatrix& R, double tol = 1e-12);

/// h_kl = R_kl^{1/2} g, g ~ CN(0, I_N), independent across k and l.
std::vector<CMatrix> sample_ue_ap(const CorrelationSet& corr, Rng& rng);

/// G_l with i.i.d. CN(0, gain_l) entries, gain from the AP-CPU distance.
/// Throws SingularMatrixError if a draw is numerically rank deficient.
std::vector<CMatrix> sample_ap_cpu(const NetworkLayout& layout, int N, int M, Rng& rng);

/// Stacked channel [H_1; ...; H_L] of size LN x K.
CMatrix stack_channels(const std::vector<CMatrix>& H);

}  // namespace cfota
