#include "cfota/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cfota/random.hpp"
#include "json.hpp"

namespace cfota {

using nlohmann::json;

std::string to_string(EstimatorKind kind) { return kind == EstimatorKind::kLs ? "ls" : "lmmse"; }

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kLmmse: return "lmmse";
    case DetectorKind::kLs: return "ls";
    case DetectorKind::kMl: return "ml";
    case DetectorKind::kSoft: return "soft";
  }
  return "lmmse";
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

EstimatorKind parse_estimator(const std::string& name) {
  const auto n = lower(name);
  if (n == "ls" || n == "mvu") return EstimatorKind::kLs;
  if (n == "lmmse") return EstimatorKind::kLmmse;
  throw ValidationError("unknown estimator '" + name + "' (expected ls or lmmse)");
}

DetectorKind parse_detector(const std::string& name) {
  const auto n = lower(name);
  if (n == "lmmse") return DetectorKind::kLmmse;
  if (n == "ls" || n == "zf") return DetectorKind::kLs;
  if (n == "ml" || n == "map") return DetectorKind::kMl;
  if (n == "soft") return DetectorKind::kSoft;
  throw ValidationError("unknown detector '" + name + "' (expected lmmse, ls, ml or soft)");
}

double SystemConfig::noise_power_w() const {
  const double dbm = noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

void validate(const SystemConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what + " violated");
  };
  require(c.L >= 1, "L ≥ 1");
  require(c.K >= 1, "K ≥ 1");
  require(c.N >= 1, "N ≥ 1");
  require(c.M >= 1, "M ≥ 1");
  require(c.tau_u >= 1, "tau_u ≥ 1");
  require(static_cast<long>(c.L) * c.N > c.K, "L*N > K");
  require(c.N >= c.M, "N ≥ M");
  require(c.P_max > 0, "P_max > 0");
  require(c.rho_ul > 0, "rho_ul > 0");
  require(c.bandwidth_hz > 0, "bandwidth_hz > 0");
  require(c.area_side_m > 0, "area_side_m > 0");
  require(c.ap_radius_m >= 0, "ap_radius_m ≥ 0");
  require(c.antenna_height_m >= 0, "antenna_height_m ≥ 0");
  require(c.trials >= 1, "trials ≥ 1");
  require(c.fronthaul_coherence_blocks >= 0, "fronthaul_coherence_blocks ≥ 0");
  require(c.sweep.min_errors >= 1, "sweep.min_errors ≥ 1");
  require(c.sweep.batch_trials >= 1, "sweep.batch_trials ≥ 1");
  require(c.coding.max_iterations >= 1, "coding.max_iterations ≥ 1");
  require(c.coding.minsum_scale > 0 && c.coding.minsum_scale <= 1, "0 < coding.minsum_scale ≤ 1");
  const auto m = lower(c.modulation);
  require(m == "qpsk" || m == "4qam" || m == "16qam", "modulation in {qpsk, 4qam, 16qam}");
  for (double p : c.sweep.p_max_w) require(p > 0, "sweep.p_max_w > 0");
  for (double p : c.sweep.coded_p_max_w) require(p > 0, "sweep.coded_p_max_w > 0");
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return it.key() == k; });
    if (!ok) throw ValidationError("unknown key '" + where + it.key() + "'");
  }
}

}  // namespace

SystemConfig config_from_json_text(const std::string& text) {
  SystemConfig c;
  const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); });
  if (blank) return c;

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
  }
  if (!j.is_object()) throw ParseError("config root must be an object", 0);

  reject_unknown(j,
                 {"L", "K", "N", "M", "tau_u", "P_max", "rho_ul", "rho_ul_db", "bandwidth_hz",
                  "noise_psd_dbm_hz", "noise_figure_db", "carrier_freq_hz", "area_side_m",
                  "ap_radius_m", "antenna_height_m", "seed", "trials", "modulation", "estimator",
                  "detector", "fronthaul_coherence_blocks", "redraw_layout", "sweep", "coding"},
                 "");
  try {
    read(j, "L", c.L);
    read(j, "K", c.K);
    read(j, "N", c.N);
    read(j, "M", c.M);
    read(j, "tau_u", c.tau_u);
    read(j, "P_max", c.P_max);
    read(j, "rho_ul", c.rho_ul);
    if (j.contains("rho_ul_db")) {
      if (j.contains("rho_ul")) throw ValidationError("give rho_ul or rho_ul_db, not both");
      c.rho_ul = db_to_linear(j.at("rho_ul_db").get<double>());
    }
    read(j, "bandwidth_hz", c.bandwidth_hz);
    read(j, "noise_psd_dbm_hz", c.noise_psd_dbm_hz);
    read(j, "noise_figure_db", c.noise_figure_db);
    read(j, "carrier_freq_hz", c.carrier_freq_hz);
    read(j, "area_side_m", c.area_side_m);
    read(j, "ap_radius_m", c.ap_radius_m);
    read(j, "antenna_height_m", c.antenna_height_m);
    read(j, "seed", c.seed);
    read(j, "trials", c.trials);
    read(j, "modulation", c.modulation);
    if (j.contains("estimator")) c.estimator = parse_estimator(j.at("estimator").get<std::string>());
    if (j.contains("detector")) c.detector = parse_detector(j.at("detector").get<std::string>());
    read(j, "fronthaul_coherence_blocks", c.fronthaul_coherence_blocks);
    read(j, "redraw_layout", c.redraw_layout);

    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      reject_unknown(s,
                     {"rho_ul_db", "p_max_w", "p_max_dbm", "pmax_rho_ul_db", "ebn0_db",
                      "coded_p_max_w", "min_errors", "batch_trials"},
                     "sweep.");
      read(s, "rho_ul_db", c.sweep.rho_ul_db);
      read(s, "p_max_w", c.sweep.p_max_w);
      read(s, "p_max_dbm", c.sweep.p_max_dbm);
      read(s, "pmax_rho_ul_db", c.sweep.pmax_rho_ul_db);
      read(s, "ebn0_db", c.sweep.ebn0_db);
      read(s, "coded_p_max_w", c.sweep.coded_p_max_w);
      read(s, "min_errors", c.sweep.min_errors);
      read(s, "batch_trials", c.sweep.batch_trials);
    }
    if (j.contains("coding")) {
      const json& s = j.at("coding");
      reject_unknown(s, {"prototype_path", "max_iterations", "minsum_scale"}, "coding.");
      read(s, "prototype_path", c.coding.prototype_path);
      read(s, "max_iterations", c.coding.max_iterations);
      read(s, "minsum_scale", c.coding.minsum_scale);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config has a value of the wrong type: ") + e.what(), 0);
  }
  validate(c);
  return c;
}

std::string config_to_json_text(const SystemConfig& c) {
  json j;
  j["L"] = c.L;
  j["K"] = c.K;
  j["N"] = c.N;
  j["M"] = c.M;
  j["tau_u"] = c.tau_u;
  j["P_max"] = c.P_max;
  j["rho_ul"] = c.rho_ul;
  j["bandwidth_hz"] = c.bandwidth_hz;
  j["noise_psd_dbm_hz"] = c.noise_psd_dbm_hz;
  j["noise_figure_db"] = c.noise_figure_db;
  j["carrier_freq_hz"] = c.carrier_freq_hz;
  j["area_side_m"] = c.area_side_m;
  j["ap_radius_m"] = c.ap_radius_m;
  j["antenna_height_m"] = c.antenna_height_m;
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["modulation"] = c.modulation;
  j["estimator"] = to_string(c.estimator);
  j["detector"] = to_string(c.detector);
  j["fronthaul_coherence_blocks"] = c.fronthaul_coherence_blocks;
  j["redraw_layout"] = c.redraw_layout;
  j["sweep"] = {{"rho_ul_db", c.sweep.rho_ul_db},
                {"p_max_w", c.sweep.p_max_w},
                {"p_max_dbm", c.sweep.p_max_dbm},
                {"pmax_rho_ul_db", c.sweep.pmax_rho_ul_db},
                {"ebn0_db", c.sweep.ebn0_db},
                {"coded_p_max_w", c.sweep.coded_p_max_w},
                {"min_errors", c.sweep.min_errors},
                {"batch_trials", c.sweep.batch_trials}};
  j["coding"] = {{"prototype_path", c.coding.prototype_path},
                 {"max_iterations", c.coding.max_iterations},
                 {"minsum_scale", c.coding.minsum_scale}};
  return j.dump(2);
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_fingerprint(const SystemConfig& cfg) {
  const std::string text = config_to_json_text(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(mix64(h)));
  return buf;
}

}  // namespace cfota
