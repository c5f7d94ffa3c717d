#include "cfota/geometry.hpp"

#include <cmath>
#include <numbers>

namespace cfota {

double path_loss_db(double distance_m) {
  if (!(distance_m > 0)) throw ValidationError("path loss needs a positive distance");
  return -30.5 - 36.7 * std::log10(distance_m);
}

NetworkLayout generate_layout(const SystemConfig& cfg, Rng& rng) {
  NetworkLayout out;
  const double half = 0.5 * cfg.area_side_m;
  const double h = cfg.antenna_height_m;
  out.cpu_position = Vec3(half, half, h);

  out.ap_positions.reserve(static_cast<size_t>(cfg.L));
  for (int l = 0; l < cfg.L; ++l) {
    const double angle = 2.0 * std::numbers::pi * l / cfg.L;
    out.ap_positions.emplace_back(half + cfg.ap_radius_m * std::cos(angle),
                                  half + cfg.ap_radius_m * std::sin(angle), h);
  }

  out.ue_positions.reserve(static_cast<size_t>(cfg.K));
  for (int k = 0; k < cfg.K; ++k) {
    const double x = cfg.area_side_m * rng.uniform();
    const double y = cfg.area_side_m * rng.uniform();
    out.ue_positions.emplace_back(x, y, 0.0);
  }
  return out;
}

CorrelationSet build_correlations(const NetworkLayout& layout, const SystemConfig& cfg) {
  CorrelationSet out;
  out.num_ues = static_cast<int>(layout.ue_positions.size());
  out.num_aps = static_cast<int>(layout.ap_positions.size());
  out.antennas = cfg.N;
  const size_t pairs = static_cast<size_t>(out.num_ues) * static_cast<size_t>(out.num_aps);
  out.beta.resize(pairs);
  out.R.resize(pairs);

  double sum = 0;
  for (int k = 0; k < out.num_ues; ++k) {
    for (int l = 0; l < out.num_aps; ++l) {
      const double d = (layout.ue_positions[static_cast<size_t>(k)] -
                        layout.ap_positions[static_cast<size_t>(l)])
                           .norm();
      const double beta = db_to_linear(path_loss_db(d));
      out.beta[static_cast<size_t>(k * out.num_aps + l)] = beta;
      sum += beta;
    }
  }
  out.beta_avg = sum / static_cast<double>(pairs);

  for (int k = 0; k < out.num_ues; ++k)
    for (int l = 0; l < out.num_aps; ++l)
      out.at(k, l) = CMatrix::Identity(cfg.N, cfg.N) * (out.beta_at(k, l) / out.beta_avg);
  return out;
}

double fronthaul_gain(const NetworkLayout& layout, int l) {
  const double d = (layout.ap_positions[static_cast<size_t>(l)] - layout.cpu_position).norm();
  return db_to_linear(path_loss_db(d));
}

}  // namespace cfota
