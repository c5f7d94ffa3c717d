#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cfota/config.hpp"
#include "cfota/types.hpp"

namespace cfota {

/// One CSV row: a metric at a sweep value for one configuration label.
struct ResultRow {
  double value = 0;
  double metric = 0;
  double stderr = 0;
  std::int64_t trials = 0;
  std::string label;
};

struct ExperimentResult {
  std::string experiment;
  std::string sweep_variable;
  std::string metric_name;
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::vector<ResultRow> rows;

  /// Header "value,metric,stderr,trials,label" and one line per row, numbers
  /// printed with %.10g.
  std::string to_csv() const;
  /// Row lookup; throws std::out_of_range when absent.
  const ResultRow& at(const std::string& label, double value) const;
  /// Rows of one label in sweep order.
  std::vector<ResultRow> series(const std::string& label) const;
  std::vector<std::string> labels() const;
};

struct RunOptions {
  std::vector<EstimatorKind> estimators{EstimatorKind::kLs, EstimatorKind::kLmmse};
  bool wired_baseline = true;
  /// Worker threads; 0 uses the hardware concurrency.
  int threads = 0;
  /// Optional progress sink (sweep value, label, trials so far).
  std::function<void(const std::string&)> progress;
};

/// Stable experiment identifiers used to key RNG substreams.
enum class ExperimentId : std::uint64_t {
  kNmse = 11,
  kSerVsSnr = 12,
  kSerVsPmax = 13,
  kCodedBer = 14,
  kMoments = 15,
  kPower = 16,
};

/// NMSE (dB) of the estimated Gramian and matched-filter statistics versus
/// rho_ul for every P_max in cfg.sweep.p_max_w and each estimator.
/// Labels: "<gramian|matched-filter>/<ls|lmmse>/pmax=<W>".
ExperimentResult run_nmse(const SystemConfig& cfg, const RunOptions& opts = {});

/// Symbol error rate versus rho_ul (dB) with cfg.detector.
/// Labels: "wired" and "ota-<est>/pmax=<W>".
ExperimentResult run_ser(const SystemConfig& cfg, const RunOptions& opts = {});

/// SER versus P_max (dBm) at each rho_ul in cfg.sweep.pmax_rho_ul_db.
/// Labels: "rho=<dB>/wired" and "rho=<dB>/ota-<est>".
ExperimentResult run_ser_vs_pmax(const SystemConfig& cfg, const RunOptions& opts = {});

/// Coded BER versus Eb/N0 (dB at average path loss) with one LDPC codeword
/// per user per block and max-log sphere LLRs. Labels: "wired",
/// "ota-<est>/pmax=<W>" for cfg.sweep.coded_p_max_w, and "uncoded-wired".
ExperimentResult run_coded_ber(const SystemConfig& cfg, const RunOptions& opts = {});

/// Closed-form versus Monte Carlo moments for the scenario drop of cfg.seed.
struct MomentCheck {
  std::string quantity;
  double analytic = 0;
  double empirical = 0;
  double stderr = 0;
  bool pass = false;
};

struct MomentReport {
  std::int64_t draws = 0;
  std::vector<MomentCheck> checks;
  bool pass() const;
  /// Same CSV schema: value = analytic, metric = empirical.
  ExperimentResult as_result(const SystemConfig& cfg) const;
};

/// Relative tolerance on nonzero entries.
inline constexpr double kMomentRelTol = 0.02;
/// Entries that are zero in the model must lie within this many standard
/// errors of zero.
inline constexpr double kMomentZeroSigmas = 3.0;

MomentReport validate_moments(const SystemConfig& cfg, std::int64_t draws,
                              const RunOptions& opts = {});

/// Empirical average fronthaul power per AP and phase after the rho_c
/// feedback, in Watts, over cfg.trials trials.
struct PowerReport {
  std::int64_t trials = 0;
  std::vector<double> phase1_w;  // per AP
  std::vector<double> phase2_w;
  double p_max_w = 0;
};

PowerReport measure_fronthaul_power(const SystemConfig& cfg, const RunOptions& opts = {});

}  // namespace cfota
