// Command line driver for the Monte Carlo experiments.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "cfota/config.hpp"
#include "cfota/harness.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::string out;
  bool wired = false;
  std::string estimator;
  std::string detector;
  int threads = 0;
  bool progress = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON scenario file (defaults when omitted)");
  app->add_option("--seed", c.seed, "master seed (overrides the config)");
  app->add_option("--trials", c.trials, "trial cap per sweep point (draws for validate-moments)");
  app->add_option("--out", c.out, "CSV output path (stdout when omitted)");
  app->add_flag("--wired-baseline", c.wired, "also run the wired fronthaul baseline");
  app->add_option("--estimator", c.estimator, "restrict to one CPU estimator")
      ->check(CLI::IsMember({"ls", "lmmse"}));
  app->add_option("--detector", c.detector, "data detector")->check(CLI::IsMember({"lmmse", "ls", "ml", "soft"}));
  app->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  app->add_flag("--progress", c.progress, "log progress to stderr");
}

cfota::SystemConfig resolve(const Common& c) {
  cfota::SystemConfig cfg = c.config.empty() ? cfota::SystemConfig{} : cfota::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.trials) cfg.trials = *c.trials;
  if (!c.detector.empty()) cfg.detector = cfota::parse_detector(c.detector);
  cfota::validate(cfg);
  return cfg;
}

cfota::RunOptions options(const Common& c) {
  cfota::RunOptions o;
  o.wired_baseline = c.wired;
  o.threads = c.threads;
  if (!c.estimator.empty()) o.estimators = {cfota::parse_estimator(c.estimator)};
  if (c.progress) o.progress = [](const std::string& s) { std::cerr << s << "\n"; };
  return o;
}

void emit(const cfota::ExperimentResult& r, const std::string& out) {
  const std::string csv = r.to_csv();
  if (out.empty()) {
    std::cout << csv;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << csv;
  nlohmann::json meta = {{"experiment", r.experiment}, {"sweep_variable", r.sweep_variable},
                         {"metric", r.metric_name},   {"seed", r.seed},
                         {"config_fingerprint", r.fingerprint}};
  std::ofstream m(out + ".meta.json", std::ios::binary);
  m << meta.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free massive MIMO uplink with an over-the-air fronthaul"};
  app.require_subcommand(1);

  Common nmse, snr, pmax, coded, moments;
  add_common(app.add_subcommand("nmse", "NMSE of the estimated sufficient statistics vs rho_ul"), nmse);
  add_common(app.add_subcommand("ser-vs-snr", "symbol error rate vs rho_ul"), snr);
  add_common(app.add_subcommand("ser-vs-pmax", "symbol error rate vs P_max (dBm)"), pmax);
  add_common(app.add_subcommand("coded-ber", "LDPC-coded BER vs Eb/N0"), coded);
  add_common(app.add_subcommand("validate-moments", "closed-form vs Monte Carlo moments"), moments);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("nmse")) {
      emit(cfota::run_nmse(resolve(nmse), options(nmse)), nmse.out);
    } else if (app.got_subcommand("ser-vs-snr")) {
      emit(cfota::run_ser(resolve(snr), options(snr)), snr.out);
    } else if (app.got_subcommand("ser-vs-pmax")) {
      emit(cfota::run_ser_vs_pmax(resolve(pmax), options(pmax)), pmax.out);
    } else if (app.got_subcommand("coded-ber")) {
      emit(cfota::run_coded_ber(resolve(coded), options(coded)), coded.out);
    } else {
      const cfota::SystemConfig cfg = resolve(moments);
      const cfota::MomentReport report = cfota::validate_moments(cfg, cfg.trials, options(moments));
      emit(report.as_result(cfg), moments.out);
      std::size_t failed = 0;
      for (const auto& c : report.checks) {
        if (c.pass) continue;
        ++failed;
        std::cerr << "FAIL " << c.quantity << " analytic=" << c.analytic << " empirical=" << c.empirical
                  << " stderr=" << c.stderr << "\n";
      }
      std::cerr << report.checks.size() - failed << "/" << report.checks.size() << " moment checks passed\n";
      if (failed != 0) return 1;
    }
  } catch (const cfota::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
