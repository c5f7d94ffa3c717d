#pragma once

#include <cstdint>
#include <vector>

#include "cfota/geometry.hpp"
#include "cfota/random.hpp"
#include "cfota/types.hpp"
#include "cfota/uplink.hpp"

namespace cfota {

/// Analytic first/second-order statistics of the packed sufficient
/// statistics under Rayleigh fading with unit-power i.i.d. symbols.
struct Phase1Moments {
  RVector mu;                     // mean of sum_l x_l^(1), length K(K+1)/2
  RVector C_diag;                 // diagonal of its covariance
  std::vector<RVector> mu_l;      // per AP
  std::vector<RVector> C_l_diag;  // per AP

  /// E[x_l x_l^H] = C_l + mu_l mu_l^H, the full correlation used by the
  /// power formula.
  CMatrix second_moment(int l) const;
  /// Covariance as a dense matrix (diagonal by construction).
  CMatrix covariance() const;
};

struct Phase2Moments {
  CMatrix C;                    // K x K covariance of sum_l t_{l,t} (any t)
  std::vector<CMatrix> C_l;     // C_{l,t}: covariance of t_{l,t}
  std::vector<RVector> gram_mean;  // diag of E[H_l^H H_l] per AP
  double rho_ul = 0.0;

  /// Cross-covariance C_{ll',t} = rho_ul E[H_l^H H_l] E[H_l'^H H_l'].
  CMatrix cross(int l, int lp) const;
};

/// Zero-based packed positions of the diagonal entries ||h_j||^2, i.e. the
/// only nonzero means; 1-based they are (K - j/2)(j - 1) + j.
std::vector<int> diagonal_positions(int K);

Phase1Moments phase1_moments(const CorrelationSet& corr);
Phase2Moments phase2_moments(const CorrelationSet& corr, double rho_ul);

struct MomentModel {
  Phase1Moments phase1;
  Phase2Moments phase2;
  std::vector<CMatrix> EWW;  // per AP, M x M
};

/// Empirical moments from direct simulation of (H, s, n).
struct EmpiricalMoments {
  std::int64_t draws = 0;
  CVector mean1;      // of sum_l x_l^(1)
  RVector mean1_se;   // RMS standard error of each mean entry
  CMatrix cov1;       // covariance of sum_l x_l^(1)
  RMatrix cov1_se;    // RMS standard error of each covariance entry
  CVector mean2;      // of sum_l t_{l,t}
  CMatrix cov2;       // covariance of sum_l t_{l,t}
  RMatrix cov2_se;
  std::vector<CMatrix> cov2_l;  // per-AP covariance of t_{l,t}
  CMatrix cross2;     // sum_{l != l'} E[t_l t_l'^H] (total cross term)
  RMatrix cross2_se;
};

/// Monte Carlo oracle independent of the closed forms: draws channels from
/// the correlation set, symbols from `cons`, and noise, then forms the
/// statistics exactly as the APs do. Requires draws >= 2.
EmpiricalMoments mc_moment_oracle(const CorrelationSet& corr, double rho_ul, std::int64_t draws,
                                  const Constellation& cons, Rng& rng);

}  // namespace cfota
