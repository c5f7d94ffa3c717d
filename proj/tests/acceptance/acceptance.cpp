// Acceptance checks for the simulator. Prints one PASS/FAIL line per
// criterion (plus indented detail lines) and exits nonzero if any fail.
//
//   cfota_acceptance [criterion ...]     e.g. cfota_acceptance 1 7 8
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "cfota/channel.hpp"
#include "cfota/config.hpp"
#include "cfota/detectors.hpp"
#include "cfota/fronthaul.hpp"
#include "cfota/geometry.hpp"
#include "cfota/harness.hpp"
#include "cfota/pipeline.hpp"
#include "cfota/random.hpp"
#include "cfota/uplink.hpp"

using namespace cfota;

namespace {

const std::string kConfigDir = CFOTA_CONFIG_DIR;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

SystemConfig config(const std::string& name) { return load_config(kConfigDir + "/" + name); }

double combined_se(const ResultRow& a, const ResultRow& b) {
  return std::sqrt(a.stderr * a.stderr + b.stderr * b.stderr);
}

// 1 ---------------------------------------------------------------------

Outcome sufficiency() {
  Outcome o;
  SystemConfig cfg;
  const Constellation cons = Constellation::from_name(cfg.modulation);
  const std::vector<double> rhos{-20, -10, 0, 10};
  double worst_T = 0, worst_t = 0;
  std::int64_t mismatched = 0, symbols = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Rng rng = Rng::substream(cfg.seed, 901, static_cast<std::uint64_t>(trial), Stream::kOracle);
    const NetworkLayout layout = generate_layout(cfg, rng);
    const CorrelationSet corr = build_correlations(layout, cfg);
    const std::vector<CMatrix> H = sample_ue_ap(corr, rng);
    const double rho = db_to_linear(rhos[static_cast<size_t>(trial) % rhos.size()]);
    const SymbolFrame frame = random_frame(cfg.K, cfg.tau_u, cons, rng);

    std::vector<LocalStatistics> local;
    std::vector<CMatrix> Y;
    for (const CMatrix& H_l : H) {
      Y.push_back(ap_receive(H_l, frame.s, rho, &rng));
      local.push_back(local_stats(H_l, Y.back()));
    }
    const LocalStatistics sum = sum_statistics(local);

    const CMatrix Hs = stack_channels(H);
    CMatrix Ys(Hs.rows(), cfg.tau_u);
    for (size_t l = 0, r = 0; l < Y.size(); r += static_cast<size_t>(Y[l].rows()), ++l)
      Ys.middleRows(static_cast<Eigen::Index>(r), Y[l].rows()) = Y[l];
    const CMatrix T = Hs.adjoint() * Hs;
    const CMatrix t = Hs.adjoint() * Ys;
    worst_T = std::max(worst_T, (sum.T - T).norm() / T.norm());
    worst_t = std::max(worst_t, (sum.t - t).norm() / t.norm());

    // Centralized LMMSE straight from the stacked model.
    const CMatrix A = rho * T + CMatrix::Identity(cfg.K, cfg.K);
    const CMatrix s_central = A.ldlt().solve(std::sqrt(rho) * t);
    const auto a = hard_decide(lmmse_detect(sum.T, sum.t, rho), cons);
    const auto b = hard_decide(s_central, cons);
    for (size_t i = 0; i < a.size(); ++i) mismatched += a[i] != b[i];
    symbols += static_cast<std::int64_t>(a.size());
  }
  o.check(worst_T <= 1e-10, fmt("max relative error of sum T_l: %.3g (<= 1e-10)", worst_T));
  o.check(worst_t <= 1e-10, fmt("max relative error of sum t_l: %.3g (<= 1e-10)", worst_t));
  o.check(mismatched == 0, fmt("hard-decision mismatches: %.0f of %.0f", double(mismatched), double(symbols)));
  return o;
}

// 2 ---------------------------------------------------------------------

Outcome moments() {
  Outcome o;
  const SystemConfig cfg = config("default.json");
  const MomentReport rep = validate_moments(cfg, 1000000);
  std::size_t failed = 0;
  double worst_rel = 0, worst_sigma = 0;
  for (const auto& c : rep.checks) {
    if (c.analytic != 0.0)
      worst_rel = std::max(worst_rel, std::abs(c.empirical - c.analytic) / std::abs(c.analytic));
    else if (c.stderr > 0)
      worst_sigma = std::max(worst_sigma, std::abs(c.empirical) / c.stderr);
    if (!c.pass) {
      ++failed;
      if (failed <= 10)
        o.notes.push_back("     " + c.quantity + fmt(" analytic=%.6g empirical=%.6g se=%.3g", c.analytic,
                                                      c.empirical, c.stderr));
    }
  }
  o.check(failed == 0, fmt("%.0f of %.0f entries out of tolerance", double(failed), double(rep.checks.size())));
  o.notes.push_back(fmt("     worst relative error on nonzero entries %.4f; worst |zero entry|/se %.2f",
                        worst_rel, worst_sigma));
  return o;
}

// 3 ---------------------------------------------------------------------

std::vector<double> metrics(const ExperimentResult& r, const std::string& label) {
  std::vector<double> v;
  for (const auto& row : r.series(label)) v.push_back(row.metric);
  return v;
}

double range_of(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

Outcome nmse_curves() {
  Outcome o;
  const SystemConfig cfg = config("nmse.json");
  RunOptions opts;
  opts.wired_baseline = false;
  const ExperimentResult r = run_nmse(cfg, opts);
  std::int64_t min_trials = cfg.trials;
  for (const auto& row : r.rows) min_trials = std::min(min_trials, row.trials);
  o.check(min_trials >= 100000, fmt("trials per point: %.0f (>= 1e5)", double(min_trials)));

  const double top = *std::max_element(cfg.sweep.rho_ul_db.begin(), cfg.sweep.rho_ul_db.end());
  for (const char* est : {"ls", "lmmse"}) {
    const std::string g1 = std::string("gramian/") + est + "/pmax=1";
    const auto g = metrics(r, g1);
    const double worst = *std::max_element(g.begin(), g.end());
    o.check(worst < -40.0, g1 + fmt(": worst NMSE %.2f dB (< -40)", worst));
    o.check(range_of(g) < 0.5, g1 + fmt(": range %.3f dB (< 0.5)", range_of(g)));

    const std::string m1 = std::string("matched-filter/") + est + "/pmax=1";
    std::vector<double> high;
    for (const auto& row : r.series(m1))
      if (row.value >= top - 15.0) high.push_back(row.metric);
    o.check(range_of(high) < 1.0, m1 + fmt(": range over the top 15 dB %.3f dB (< 1)", range_of(high)));
  }
  for (const char* stat : {"gramian", "matched-filter"}) {
    for (const char* p : {"1", "5"}) {
      const std::string ls = std::string(stat) + "/ls/pmax=" + p;
      const std::string lm = std::string(stat) + "/lmmse/pmax=" + p;
      double worst = -1e9;
      for (double rho : cfg.sweep.rho_ul_db) worst = std::max(worst, r.at(lm, rho).metric - r.at(ls, rho).metric);
      o.check(worst <= 0.1, lm + fmt(" minus LS: max %.3f dB (<= 0.1)", worst));
    }
    for (const char* est : {"ls", "lmmse"}) {
      const std::string a = std::string(stat) + "/" + est + "/pmax=1";
      const std::string b = std::string(stat) + "/" + est + "/pmax=5";
      double worst = -1e9;
      for (double rho : cfg.sweep.rho_ul_db) worst = std::max(worst, r.at(b, rho).metric - r.at(a, rho).metric);
      o.check(worst < 0.0, b + fmt(" vs 1 W: max difference %.3f dB (< 0)", worst));
    }
  }
  return o;
}

// 4 ---------------------------------------------------------------------

Outcome ser_curves() {
  Outcome o;
  SystemConfig cfg = config("ser_vs_snr.json");
  RunOptions opts;
  opts.estimators = {EstimatorKind::kLmmse};
  const ExperimentResult r = run_ser(cfg, opts);
  for (double rho : cfg.sweep.rho_ul_db) {
    if (rho > -15) continue;
    const double w = r.at("wired", rho).metric, a = r.at("ota-lmmse/pmax=5", rho).metric;
    const double ratio = a / w;
    o.check(ratio <= 2.0 && ratio >= 0.5,
            fmt("rho=%g dB: OTA(5 W)/wired SER ratio %.3f (within 2x)", rho, ratio));
  }
  const double top = cfg.sweep.rho_ul_db.back();
  const double s10 = r.at("ota-lmmse/pmax=1", top).metric, s0 = r.at("ota-lmmse/pmax=1", 0).metric;
  const double ratio = s0 / s10;
  o.check(ratio <= 3.0 && ratio >= 1.0 / 3.0,
          fmt("1 W floor: SER(%g dB)=%.4g, SER(0 dB)=%.4g, within 3x", top, s10, s0));
  const ResultRow& f1 = r.at("ota-lmmse/pmax=1", top);
  const ResultRow& f5 = r.at("ota-lmmse/pmax=5", top);
  o.check(f5.metric < f1.metric, fmt("floor at 5 W %.4g < floor at 1 W %.4g", f5.metric, f1.metric));
  return o;
}

// 5 ---------------------------------------------------------------------

Outcome pmax_curves() {
  Outcome o;
  const SystemConfig cfg = config("ser_vs_pmax.json");
  const ExperimentResult r = run_ser_vs_pmax(cfg);
  for (double rho : cfg.sweep.pmax_rho_ul_db) {
    const std::string prefix = "rho=" + fmt("%g", rho) + "/";
    for (const char* est : {"ls", "lmmse"}) {
      const auto s = r.series(prefix + "ota-" + est);
      double worst = -1e9;
      for (size_t i = 1; i < s.size(); ++i)
        worst = std::max(worst, (s[i].metric - s[i - 1].metric) / std::max(combined_se(s[i], s[i - 1]), 1e-300));
      o.check(worst <= 2.0, prefix + "ota-" + est + fmt(": largest rise %.2f SE (<= 2)", worst));
      const double ratio = s.back().metric / r.series(prefix + "wired").back().metric;
      o.check(ratio <= 1.2, prefix + "ota-" + est + fmt(": OTA/wired at %g dBm = %.3f (<= 1.2)", s.back().value, ratio));
    }
    const auto ls = r.series(prefix + "ota-ls");
    const auto lm = r.series(prefix + "ota-lmmse");
    double worst = 0;
    double at = 0;
    for (size_t i = 0; i < ls.size(); ++i) {
      const double z = std::abs(ls[i].metric - lm[i].metric) / std::max(combined_se(ls[i], lm[i]), 1e-300);
      if (z > worst) worst = z, at = ls[i].value;
    }
    o.check(worst <= 2.0, prefix + fmt("LS vs LMMSE: largest gap %.2f SE at %g dBm (<= 2)", worst, at));
  }
  return o;
}

// 6 ---------------------------------------------------------------------

// Eb/N0 where the BER curve first crosses `target`, by interpolation in log BER.
std::optional<double> crossing(const std::vector<ResultRow>& s, double target) {
  for (size_t i = 1; i < s.size(); ++i) {
    const double a = s[i - 1].metric, b = s[i].metric;
    if (a >= target && b < target) {
      if (b <= 0) return s[i - 1].value + (s[i].value - s[i - 1].value) * 0.5;
      const double f = (std::log(a) - std::log(target)) / (std::log(a) - std::log(b));
      return s[i - 1].value + f * (s[i].value - s[i - 1].value);
    }
  }
  return std::nullopt;
}

Outcome coded_curves() {
  Outcome o;
  const SystemConfig cfg = config("coded_ber.json");
  RunOptions opts;
  opts.estimators = {EstimatorKind::kLmmse};
  const ExperimentResult r = run_coded_ber(cfg, opts);
  const int k = 972;
  const auto wired = r.series("wired");
  const auto ota = r.series("ota-lmmse/pmax=5");
  const auto unc = r.series("uncoded-wired");
  for (const auto& s : {wired, ota, unc})
    for (const auto& row : s) o.notes.push_back(fmt("     Eb/N0=%5.1f  BER=%.3e  trials=%.0f", row.value, row.metric, double(row.trials)) + "  " + row.label);

  const auto xw = crossing(wired, 1e-3), xo = crossing(ota, 1e-3);
  if (xw && xo)
    o.check(std::abs(*xo - *xw) <= 1.0, fmt("gap at BER 1e-3: wired %.2f dB, OTA %.2f dB (<= 1 dB)", *xw, *xo));
  else
    o.check(false, std::string("gap at BER 1e-3: ") + (xw ? "" : "wired ") + (xo ? "" : "OTA ") +
                       "curve never crosses 1e-3 in the sweep");

  // Floor: the last point must be below 1e-5; with zero errors use the
  // rule-of-three 95% upper bound on the bit error probability.
  const ResultRow& last = ota.back();
  const double bound = last.metric > 0 ? last.metric : 3.0 / (double(last.trials) * cfg.K * k);
  o.check(bound <= 1e-5, fmt("OTA 5 W BER at %g dB: %.3g (<= 1e-5)", last.value, bound));

  // Beyond the waterfall = at or past the wired 1e-3 crossing.
  bool any = false;
  for (size_t i = 0; i < wired.size(); ++i) {
    if (!xw || wired[i].value < *xw) continue;
    any = true;
    const double coded = wired[i].metric > 0 ? wired[i].metric : 3.0 / (double(wired[i].trials) * cfg.K * k);
    const double gain = unc[i].metric / coded;
    o.check(gain >= 10.0, fmt("Eb/N0=%g dB: uncoded/coded = %.3g (>= 10)", wired[i].value, gain));
  }
  if (!any) o.check(false, "no sweep point beyond the wired waterfall");
  return o;
}

// 7 ---------------------------------------------------------------------

Outcome detectors() {
  Outcome o;
  const Constellation qpsk = Constellation::qam(4);
  Rng rng(20261017);
  MlOptions sphere, brute;
  brute.sphere = false;
  int ml_diff = 0;
  for (int i = 0; i < 1000; ++i) {
    const int K = 8, rows = 12;
    const CMatrix H = rng.complex_normal_matrix(rows, K);
    const double rho = db_to_linear(-5.0 + 20.0 * rng.uniform());
    CVector s(K);
    for (int k = 0; k < K; ++k) s(k) = qpsk.point(static_cast<int>(rng.bits() % 4));
    const CVector y = std::sqrt(rho) * H * s + rng.complex_normal_matrix(rows, 1);
    const MlDecision a = ml_detect(H, y, rho, qpsk, sphere);
    const MlDecision b = ml_detect(H, y, rho, qpsk, brute);
    ml_diff += a.symbols != b.symbols || a.metric != b.metric;
  }
  o.check(ml_diff == 0, fmt("sphere vs exhaustive ML (K=8, 4-QAM): %.0f of 1000 differ", ml_diff));

  int llr_diff = 0;
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const int K = 4, rows = 5;
    const CMatrix H = rng.complex_normal_matrix(rows, K);
    const double rho = db_to_linear(-5.0 + 20.0 * rng.uniform());
    CVector s(K);
    for (int k = 0; k < K; ++k) s(k) = qpsk.point(static_cast<int>(rng.bits() % 4));
    const CVector y = std::sqrt(rho) * H * s + rng.complex_normal_matrix(rows, 1);
    const RVector a = soft_llrs(H, y, rho, qpsk, LlrMode::kMaxLog, sphere);
    const RVector b = soft_llrs(H, y, rho, qpsk, LlrMode::kMaxLog, brute);
    llr_diff += (a.array() != b.array()).any();
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  o.check(llr_diff == 0, fmt("sphere vs exhaustive max-log LLRs (K=4): %.0f of 1000 differ (max |diff| %.3g)",
                             llr_diff, worst));
  return o;
}

// 8 ---------------------------------------------------------------------

Outcome power() {
  Outcome o;
  const SystemConfig cfg = config("power.json");
  const PowerReport p = measure_fronthaul_power(cfg);
  o.check(p.trials >= 10000, fmt("trials: %.0f (>= 1e4)", double(p.trials)));
  const double w1 = *std::max_element(p.phase1_w.begin(), p.phase1_w.end());
  const double w2 = *std::max_element(p.phase2_w.begin(), p.phase2_w.end());
  o.check(w1 <= 1.05 * cfg.P_max, fmt("phase 1: max AP power %.4f W (<= %.3f)", w1, 1.05 * cfg.P_max));
  o.check(w2 <= 1.05 * cfg.P_max, fmt("phase 2: max AP power %.4f W (<= %.3f)", w2, 1.05 * cfg.P_max));

  const int K = 8, M = 4;
  const int len = packed_gramian_length(K);
  const double omega = phase_energy(CMatrix::Identity(len, len), CMatrix::Identity(M, M), 1.0);
  const double P = phase_power(omega, chunk_count(len, M));
  o.check(omega == 36.0 && P == 4.0, fmt("identity moments, K=8, M=4: Omega=%g, P=%g (36, 4)", omega, P));
  return o;
}

// 9 ---------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  SystemConfig cfg;
  cfg.L = 6;
  cfg.K = 4;
  cfg.trials = 60;
  cfg.sweep.batch_trials = 20;
  cfg.sweep.rho_ul_db = {-10, 0, 10};
  cfg.sweep.p_max_dbm = {20, 35, 50};
  RunOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const std::vector<std::pair<std::string, std::function<ExperimentResult(const SystemConfig&, const RunOptions&)>>>
      runs{{"nmse", run_nmse},
           {"ser-vs-snr", run_ser},
           {"ser-vs-pmax", run_ser_vs_pmax},
           {"validate-moments",
            [](const SystemConfig& c, const RunOptions& ro) { return validate_moments(c, 2000, ro).as_result(c); }}};
  for (const auto& [name, fn] : runs) {
    const std::string a = fn(cfg, one).to_csv();
    const std::string b = fn(cfg, one).to_csv();
    const std::string c = fn(cfg, many).to_csv();
    o.check(a == b && a == c, name + ": repeated and multi-threaded CSV byte-identical");
  }
  SystemConfig coded = config("coded_ber.json");
  coded.trials = 2;
  coded.sweep.batch_trials = 2;
  coded.sweep.ebn0_db = {0, 10};
  const std::string a = run_coded_ber(coded, one).to_csv();
  o.check(a == run_coded_ber(coded, one).to_csv() && a == run_coded_ber(coded, many).to_csv(),
          "coded-ber: repeated and multi-threaded CSV byte-identical");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"sufficiency identity", sufficiency},
      {"moment validation", moments},
      {"NMSE vs rho", nmse_curves},
      {"SER vs rho", ser_curves},
      {"SER vs P_max", pmax_curves},
      {"coded BER", coded_curves},
      {"detector oracles", detectors},
      {"power protocol", power},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), secs);
    for (const auto& n : out.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed == 0 ? 0 : 1;
}
