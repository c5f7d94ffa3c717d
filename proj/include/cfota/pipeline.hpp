#pragma once

#include <vector>

#include "cfota/channel.hpp"
#include "cfota/combiner.hpp"
#include "cfota/fronthaul.hpp"
#include "cfota/geometry.hpp"
#include "cfota/moments.hpp"
#include "cfota/uplink.hpp"

namespace cfota {

/// Fronthaul state of one coherence epoch: channels, ZF precoders and the
/// precoder Gram expectations used in the power reports.
struct FronthaulSetup {
  std::vector<CMatrix> G;
  std::vector<CMatrix> W;
  std::vector<CMatrix> EWW;
  std::vector<double> gain;
};

FronthaulSetup make_fronthaul(const NetworkLayout& layout, int N, int M, Rng& rng);

/// Powers each AP reports for a phase with rho_c = 1.
std::vector<double> phase1_powers(const Phase1Moments& m, const FronthaulSetup& fh, int M);
std::vector<double> phase2_powers(const Phase2Moments& m, int tau, const FronthaulSetup& fh,
                                  int M);

/// Everything the CPU sees and computes for one phase.
struct PhaseResult {
  double rho_c = 0;
  std::vector<double> powers;  // reported, rho_c = 1
  CMatrix Z;
  CVector truth;     // sum_l x_l, unpadded
  CVector estimate;  // CPU estimate of truth
};

/// Pack, chunk, scale, superpose and estimate one phase.
/// `packed[l]` is x_l; `noise` is the M x M_i unit-variance fronthaul noise
/// (pass an empty matrix for a noiseless link).
PhaseResult run_phase(const std::vector<CVector>& packed, const std::vector<double>& powers,
                      double p_max_normalized, const FronthaulSetup& fh, const ChunkPrior& prior,
                      EstimatorKind kind, const CMatrix& noise);

/// Exact sums sum_l T_l and sum_l t_l (the wired fronthaul).
LocalStatistics sum_statistics(const std::vector<LocalStatistics>& stats);

}  // namespace cfota
