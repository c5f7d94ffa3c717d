#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"

#include "cfota/config.hpp"
#include "cfota/geometry.hpp"
#include "cfota/random.hpp"

using namespace cfota;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("load_config: paper dimensions are valid") {
  const auto cfg = load_config(write_temp("cfota_cfg_a.json", R"({"L":16,"K":8,"N":5,"M":4})"));
  CHECK(cfg.L == 16);
  CHECK(cfg.K == 8);
  CHECK(cfg.N == 5);
  CHECK(cfg.M == 4);
}

TEST_CASE("load_config: M > N names the violated constraint") {
  const auto path = write_temp("cfota_cfg_b.json", R"({"M":6,"N":5})");
  CHECK_THROWS_WITH_AS(load_config(path), "N ≥ M violated", ValidationError);
}

TEST_CASE("load_config: empty file yields defaults") {
  const auto cfg = load_config(write_temp("cfota_cfg_c.json", ""));
  const SystemConfig d;
  CHECK(cfg.L == 16);
  CHECK(cfg.K == 8);
  CHECK(cfg.N == 5);
  CHECK(cfg.M == 4);
  CHECK(config_to_json_text(cfg) == config_to_json_text(d));
}

TEST_CASE("config: rejects unknown keys, bad JSON and L*N <= K") {
  CHECK_THROWS_AS(config_from_json_text(R"({"Lx":3})"), ValidationError);
  CHECK_THROWS_AS(config_from_json_text("{"), ParseError);
  CHECK_THROWS_WITH_AS(config_from_json_text(R"({"L":1,"N":4,"M":4,"K":4})"), "L*N > K violated", ValidationError);
  CHECK_THROWS_AS(config_from_json_text(R"({"P_max":0})"), ValidationError);
}

TEST_CASE("config: JSON round trip and rho_ul_db") {
  SystemConfig c;
  c.K = 4;
  c.estimator = EstimatorKind::kLs;
  c.detector = DetectorKind::kSoft;
  c.sweep.ebn0_db = {1, 2};
  const SystemConfig back = config_from_json_text(config_to_json_text(c));
  CHECK(config_to_json_text(back) == config_to_json_text(c));
  CHECK(config_fingerprint(back) == config_fingerprint(c));
  CHECK(config_fingerprint(back) != config_fingerprint(SystemConfig{}));
  CHECK(config_from_json_text(R"({"rho_ul_db":10})").rho_ul == doctest::Approx(10.0));
}

TEST_CASE("noise power is -109 dBm for the default receiver") {
  const SystemConfig c;
  CHECK(10 * std::log10(c.noise_power_w()) + 30 == doctest::Approx(-109.0));
}

TEST_CASE("generate_layout: deterministic, in the square, APs equally spaced") {
  SystemConfig cfg;
  cfg.L = 4;
  cfg.K = 50;
  Rng a(7), b(7);
  const NetworkLayout la = generate_layout(cfg, a);
  const NetworkLayout lb = generate_layout(cfg, b);
  for (int k = 0; k < cfg.K; ++k) {
    CHECK(la.ue_positions[k] == lb.ue_positions[k]);
    CHECK(la.ue_positions[k].x() >= 0);
    CHECK(la.ue_positions[k].x() <= 200);
    CHECK(la.ue_positions[k].y() >= 0);
    CHECK(la.ue_positions[k].y() <= 200);
    CHECK(la.ue_positions[k].z() == 0);
  }
  CHECK(la.cpu_position.z() == 5.0);
  for (int l = 0; l < 4; ++l) {
    const Vec3 d = la.ap_positions[l] - la.cpu_position;
    CHECK(la.ap_positions[l].z() == 5.0);
    CHECK(d.norm() == doctest::Approx(40.0));
    const double angle = std::atan2(d.y(), d.x());
    const double expected = std::remainder(l * std::numbers::pi / 2, 2 * std::numbers::pi);
    CHECK(std::abs(std::remainder(angle - expected, 2 * std::numbers::pi)) < 1e-12);
  }
}

TEST_CASE("path_loss_db") {
  CHECK(path_loss_db(1.0) == doctest::Approx(-30.5));
  CHECK(path_loss_db(100.0) == doctest::Approx(-103.9));
  CHECK(path_loss_db(40.0) == doctest::Approx(-30.5 - 36.7 * std::log10(40.0)));
  CHECK(path_loss_db(10.0) > path_loss_db(11.0));
  CHECK_THROWS_AS(path_loss_db(0.0), ValidationError);
  CHECK_THROWS_AS(path_loss_db(-1.0), ValidationError);
}

TEST_CASE("build_correlations: unit conversion, traces and arithmetic mean") {
  SystemConfig cfg;
  cfg.N = 5;
  NetworkLayout one;
  one.ap_positions = {Vec3(0, 0, 1)};
  one.ue_positions = {Vec3(0, 0, 0)};
  const CorrelationSet c1 = build_correlations(one, cfg);
  CHECK(c1.beta_at(0, 0) == doctest::Approx(std::pow(10.0, -3.05)));
  CHECK(c1.beta_avg == doctest::Approx(std::pow(10.0, -3.05)));

  // Two links whose path losses are 2x and 4x a reference.
  NetworkLayout two;
  two.ap_positions = {Vec3(0, 0, 0)};
  const double d2 = std::pow(10.0, (-30.5 - 10 * std::log10(2e-4)) / 36.7);
  const double d4 = std::pow(10.0, (-30.5 - 10 * std::log10(4e-4)) / 36.7);
  two.ue_positions = {Vec3(d2, 0, 0), Vec3(d4, 0, 0)};
  const CorrelationSet c2 = build_correlations(two, cfg);
  CHECK(c2.beta_at(0, 0) == doctest::Approx(2e-4));
  CHECK(c2.beta_at(1, 0) == doctest::Approx(4e-4));
  CHECK(c2.beta_avg == doctest::Approx(3e-4));

  Rng rng(3);
  const NetworkLayout layout = generate_layout(cfg, rng);
  const CorrelationSet c = build_correlations(layout, cfg);
  for (int k = 0; k < cfg.K; ++k)
    for (int l = 0; l < cfg.L; ++l) {
      const CMatrix& R = c.at(k, l);
      CHECK((R - R.adjoint()).norm() == 0.0);
      CHECK(R.trace().real() * c.beta_avg == doctest::Approx(cfg.N * c.beta_at(k, l)));
    }
}

TEST_CASE("fronthaul gain uses the AP-CPU distance") {
  SystemConfig cfg;
  Rng rng(1);
  const NetworkLayout layout = generate_layout(cfg, rng);
  CHECK(fronthaul_gain(layout, 3) == doctest::Approx(std::pow(10.0, path_loss_db(40.0) / 10)));
}
