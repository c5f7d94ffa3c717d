#pragma once

#include <vector>

#include "cfota/config.hpp"
#include "cfota/random.hpp"
#include "cfota/types.hpp"

namespace cfota {

struct NetworkLayout {
  std::vector<Vec3> ue_positions;  // K entries, z = 0
  std::vector<Vec3> ap_positions;  // L entries, z = antenna height
  Vec3 cpu_position = Vec3::Zero();
};

/// Large-scale statistics of the UE->AP channels. Index pairs as (k, l).
struct CorrelationSet {
  int num_ues = 0;
  int num_aps = 0;
  int antennas = 0;
  std::vector<CMatrix> R;     // R[k * L + l], N x N, normalized by beta_avg
  std::vector<double> beta;   // beta[k * L + l], linear, before normalization
  double beta_avg = 1.0;

  const CMatrix& at(int k, int l) const { return R[static_cast<size_t>(k * num_aps + l)]; }
  CMatrix& at(int k, int l) { return R[static_cast<size_t>(k * num_aps + l)]; }
  double beta_at(int k, int l) const { return beta[static_cast<size_t>(k * num_aps + l)]; }
  /// trace(R_kl) of the normalized matrix.
  double trace_at(int k, int l) const { return at(k, l).trace().real(); }
};

/// 3GPP urban microcell large-scale fading: -30.5 - 36.7 log10(d / 1 m).
/// Throws ValidationError for d <= 0.
double path_loss_db(double distance_m);

/// UEs uniform on [0, side]^2 at z = 0; CPU at the square center, raised to
/// the antenna height; APs equally spaced on a circle of ap_radius_m around
/// the CPU at the same height, the first at angle 0.
NetworkLayout generate_layout(const SystemConfig& cfg, Rng& rng);

/// Uncorrelated model R_kl = beta_kl I_N. The returned R are divided by the
/// linear mean of all beta_kl so that rho_ul refers to an average link.
CorrelationSet build_correlations(const NetworkLayout& layout, const SystemConfig& cfg);

/// Linear gain of the AP l -> CPU link in noise-normalized units.
double fronthaul_gain(const NetworkLayout& layout, int l);

}  // namespace cfota
