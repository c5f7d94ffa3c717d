#pragma once

#include <cstdint>
#include <vector>

#include "cfota/moments.hpp"
#include "cfota/types.hpp"

namespace cfota {

/// Per-chunk prior of one phase: mean (M x M_i, padded positions zero) and
/// the M x M covariance of every chunk column (padded rows/cols zero).
struct ChunkPrior {
  CMatrix mean;
  std::vector<CMatrix> cov;
};

/// Slices the phase-1 moments into chunk priors for M CPU antennas.
ChunkPrior phase1_prior(const Phase1Moments& m, int M);
/// Slices the phase-2 covariance for tau channel uses into chunk priors.
ChunkPrior phase2_prior(const Phase2Moments& m, int tau, int M);

/// x = mu + sqrt(rho_c) C (rho_c C + I)^{-1} (z - sqrt(rho_c) mu).
CVector lmmse_chunk_estimate(const CVector& z, const CVector& mu, const CMatrix& C, double rho_c);
/// Minimum-variance unbiased estimate z / sqrt(rho_c). rho_c <= 0 throws.
CVector ls_chunk_estimate(const CVector& z, double rho_c);

/// Estimate every column of Z and return the first `length` entries of the
/// unchunked sum.
CVector estimate_phase(const CMatrix& Z, double rho_c, EstimatorKind kind, const ChunkPrior& prior,
                       int length);

/// CPU-side estimates of sum_l T_l and sum_l t_{l,t}.
struct EstimatedStatistics {
  CMatrix T_hat;  // K x K, Hermitian
  CMatrix t_hat;  // K x tau
  EstimatorKind kind = EstimatorKind::kLs;
};

/// Rebuild the Gramian (upper triangle from x1, lower by conjugation, real
/// diagonal) and de-stack the matched-filter outputs. Lengths must be
/// K(K+1)/2 and tau K, else ValidationError.
EstimatedStatistics unpack(const CVector& x1, const CVector& x2, int K, int tau,
                           EstimatorKind kind = EstimatorKind::kLs);
/// Gramian part of unpack alone.
CMatrix unpack_gramian(const CVector& x1, int K);

/// Floor reported for an exactly zero error.
inline constexpr double kNmseFloorDb = -300.0;

/// Streaming NMSE = E||x - x_hat||^2 / E||x||^2 over trials, with a
/// delta-method standard error of the ratio.
class NmseAccumulator {
 public:
  void add(const CVector& x, const CVector& x_hat);
  void add(double error_energy, double signal_energy);
  void merge(const NmseAccumulator& other);

  std::int64_t count() const { return n_; }
  double ratio() const;
  /// 10 log10(ratio); kNmseFloorDb for zero error; zero signal throws.
  double db() const;
  /// Standard error of db().
  double stderr_db() const;

 private:
  std::int64_t n_ = 0;
  double sum_e_ = 0, sum_x_ = 0, sum_ee_ = 0, sum_xx_ = 0, sum_ex_ = 0;
};

/// One-shot NMSE in dB of a single estimate.
double nmse_db(const CVector& x, const CVector& x_hat);

}  // namespace cfota
