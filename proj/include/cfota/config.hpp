#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfota/types.hpp"

namespace cfota {

/// Sweep grids and stopping rules for the experiment drivers.
struct SweepConfig {
  std::vector<double> rho_ul_db{-30, -25, -20, -15, -10, -5, 0, 5, 10};
  std::vector<double> p_max_w{1.0, 5.0};
  std::vector<double> p_max_dbm{20, 25, 30, 35, 40, 45, 50};
  std::vector<double> pmax_rho_ul_db{-4, -3};
  std::vector<double> ebn0_db{-5, -2.5, 0, 2.5, 5, 7.5, 10, 12.5, 15};
  std::vector<double> coded_p_max_w{1.0, 5.0};
  std::int64_t min_errors = 100;
  std::int64_t batch_trials = 500;
};

/// LDPC settings for the coded experiment.
struct CodingConfig {
  std::string prototype_path;  // empty: built-in 802.11 n=1944 R=1/2 base matrix
  int max_iterations = 50;
  double minsum_scale = 0.75;
};

/// All scenario parameters. Field names follow the config file keys.
struct SystemConfig {
  int L = 16;  // access points
  int K = 8;   // single-antenna users
  int N = 5;   // antennas per AP
  int M = 4;   // antennas at the CPU
  int tau_u = 10;
  double P_max = 1.0;  // W, per-AP average fronthaul power
  double rho_ul = 1.0;  // linear uplink SNR at average path loss
  double bandwidth_hz = 1e6;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 5.0;
  double carrier_freq_hz = 2e9;
  double area_side_m = 200.0;
  double ap_radius_m = 40.0;
  double antenna_height_m = 5.0;
  std::uint64_t seed = 1;
  std::int64_t trials = 100000;
  std::string modulation = "qpsk";
  EstimatorKind estimator = EstimatorKind::kLmmse;
  DetectorKind detector = DetectorKind::kLmmse;
  /// UL blocks per fronthaul channel draw; 0 keeps G fixed for the whole run.
  std::int64_t fronthaul_coherence_blocks = 0;
  /// Redraw UE positions every trial (otherwise one drop per run).
  bool redraw_layout = true;
  SweepConfig sweep;
  CodingConfig coding;

  /// N0 * B * NF in Watts.
  double noise_power_w() const;
  /// P_max expressed in units of the receiver noise power.
  double p_max_normalized() const { return P_max / noise_power_w(); }
  double rho_ul_db() const { return linear_to_db(rho_ul); }
};

/// Throws ValidationError naming the first violated constraint.
void validate(const SystemConfig& cfg);

/// Parse a JSON document (text). Whitespace-only text yields the defaults.
SystemConfig config_from_json_text(const std::string& text);
/// Serialize with sorted keys; stable across runs.
std::string config_to_json_text(const SystemConfig& cfg);

/// Read a JSON config file. Omitted keys take their defaults; an empty file
/// yields the default scenario. Unknown keys are rejected.
SystemConfig load_config(const std::filesystem::path& path);

/// Stable short hash of the serialized config (hex), for result provenance.
std::string config_fingerprint(const SystemConfig& cfg);

}  // namespace cfota
