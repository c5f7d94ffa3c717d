// Python module: configs, the experiment drivers, detectors and LDPC.
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cfota/config.hpp"
#include "cfota/detectors.hpp"
#include "cfota/fronthaul.hpp"
#include "cfota/harness.hpp"
#include "cfota/ldpc.hpp"
#include "cfota/moments.hpp"

namespace py = pybind11;
using namespace cfota;

namespace {

SystemConfig config_from(const py::object& obj) {
  if (obj.is_none()) return SystemConfig{};
  if (py::isinstance<SystemConfig>(obj)) return obj.cast<SystemConfig>();
  if (py::isinstance<py::dict>(obj)) {
    const py::object dumps = py::module_::import("json").attr("dumps");
    return config_from_json_text(dumps(obj).cast<std::string>());
  }
  return load_config(obj.cast<std::filesystem::path>());
}

RunOptions run_options(bool wired, int threads, const std::vector<std::string>& estimators) {
  RunOptions o;
  o.wired_baseline = wired;
  o.threads = threads;
  if (!estimators.empty()) {
    o.estimators.clear();
    for (const auto& e : estimators) o.estimators.push_back(parse_estimator(e));
  }
  return o;
}

template <typename Fn>
void bind_experiment(py::module_& m, const char* name, Fn fn, const char* doc) {
  m.def(
      name,
      [fn](const py::object& cfg, bool wired, int threads, const std::vector<std::string>& estimators) {
        const SystemConfig c = config_from(cfg);
        const RunOptions o = run_options(wired, threads, estimators);
        py::gil_scoped_release release;
        return fn(c, o);
      },
      py::arg("config") = py::none(), py::arg("wired_baseline") = true, py::arg("threads") = 0,
      py::arg("estimators") = std::vector<std::string>{}, doc);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cell-free massive MIMO uplink with an over-the-air fronthaul";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<SweepConfig>(m, "SweepConfig")
      .def(py::init<>())
      .def_readwrite("rho_ul_db", &SweepConfig::rho_ul_db)
      .def_readwrite("p_max_w", &SweepConfig::p_max_w)
      .def_readwrite("p_max_dbm", &SweepConfig::p_max_dbm)
      .def_readwrite("pmax_rho_ul_db", &SweepConfig::pmax_rho_ul_db)
      .def_readwrite("ebn0_db", &SweepConfig::ebn0_db)
      .def_readwrite("coded_p_max_w", &SweepConfig::coded_p_max_w)
      .def_readwrite("min_errors", &SweepConfig::min_errors)
      .def_readwrite("batch_trials", &SweepConfig::batch_trials);

  py::class_<SystemConfig>(m, "SystemConfig")
      .def(py::init<>())
      .def_readwrite("L", &SystemConfig::L)
      .def_readwrite("K", &SystemConfig::K)
      .def_readwrite("N", &SystemConfig::N)
      .def_readwrite("M", &SystemConfig::M)
      .def_readwrite("tau_u", &SystemConfig::tau_u)
      .def_readwrite("P_max", &SystemConfig::P_max)
      .def_readwrite("rho_ul", &SystemConfig::rho_ul)
      .def_readwrite("seed", &SystemConfig::seed)
      .def_readwrite("trials", &SystemConfig::trials)
      .def_readwrite("modulation", &SystemConfig::modulation)
      .def_readwrite("fronthaul_coherence_blocks", &SystemConfig::fronthaul_coherence_blocks)
      .def_readwrite("redraw_layout", &SystemConfig::redraw_layout)
      .def_readwrite("sweep", &SystemConfig::sweep)
      .def_property(
          "estimator", [](const SystemConfig& c) { return to_string(c.estimator); },
          [](SystemConfig& c, const std::string& s) { c.estimator = parse_estimator(s); })
      .def_property(
          "detector", [](const SystemConfig& c) { return to_string(c.detector); },
          [](SystemConfig& c, const std::string& s) { c.detector = parse_detector(s); })
      .def("noise_power_w", &SystemConfig::noise_power_w)
      .def("p_max_normalized", &SystemConfig::p_max_normalized)
      .def("to_json", [](const SystemConfig& c) { return config_to_json_text(c); })
      .def("fingerprint", [](const SystemConfig& c) { return config_fingerprint(c); })
      .def("validate", [](const SystemConfig& c) { validate(c); });

  m.def("load_config", &load_config, py::arg("path"));
  m.def("config_from_json", &config_from_json_text, py::arg("text"));

  py::class_<ResultRow>(m, "ResultRow")
      .def_readonly("value", &ResultRow::value)
      .def_readonly("metric", &ResultRow::metric)
      .def_readonly("stderr", &ResultRow::stderr)
      .def_readonly("trials", &ResultRow::trials)
      .def_readonly("label", &ResultRow::label)
      .def("__repr__", [](const ResultRow& r) {
        return "ResultRow(" + std::to_string(r.value) + ", " + std::to_string(r.metric) + ", " + r.label + ")";
      });

  py::class_<ExperimentResult>(m, "ExperimentResult")
      .def_readonly("experiment", &ExperimentResult::experiment)
      .def_readonly("sweep_variable", &ExperimentResult::sweep_variable)
      .def_readonly("metric_name", &ExperimentResult::metric_name)
      .def_readonly("seed", &ExperimentResult::seed)
      .def_readonly("fingerprint", &ExperimentResult::fingerprint)
      .def_readonly("rows", &ExperimentResult::rows)
      .def("to_csv", &ExperimentResult::to_csv)
      .def("labels", &ExperimentResult::labels)
      .def("series", &ExperimentResult::series, py::arg("label"))
      .def("at", &ExperimentResult::at, py::arg("label"), py::arg("value"));

  bind_experiment(m, "run_nmse", run_nmse, "NMSE (dB) of the estimated statistics versus rho_ul.");
  bind_experiment(m, "run_ser", run_ser, "SER versus rho_ul (dB).");
  bind_experiment(m, "run_ser_vs_pmax", run_ser_vs_pmax, "SER versus P_max (dBm).");
  bind_experiment(m, "run_coded_ber", run_coded_ber, "LDPC-coded BER versus Eb/N0.");

  py::class_<MomentCheck>(m, "MomentCheck")
      .def_readonly("quantity", &MomentCheck::quantity)
      .def_readonly("analytic", &MomentCheck::analytic)
      .def_readonly("empirical", &MomentCheck::empirical)
      .def_readonly("stderr", &MomentCheck::stderr)
      .def_readonly("passed", &MomentCheck::pass);
  py::class_<MomentReport>(m, "MomentReport")
      .def_readonly("draws", &MomentReport::draws)
      .def_readonly("checks", &MomentReport::checks)
      .def("passed", &MomentReport::pass);
  m.def(
      "validate_moments",
      [](const py::object& cfg, std::int64_t draws, int threads) {
        const SystemConfig c = config_from(cfg);
        RunOptions o;
        o.threads = threads;
        py::gil_scoped_release release;
        return validate_moments(c, draws, o);
      },
      py::arg("config") = py::none(), py::arg("draws") = 100000, py::arg("threads") = 0);

  py::class_<PowerReport>(m, "PowerReport")
      .def_readonly("trials", &PowerReport::trials)
      .def_readonly("phase1_w", &PowerReport::phase1_w)
      .def_readonly("phase2_w", &PowerReport::phase2_w)
      .def_readonly("p_max_w", &PowerReport::p_max_w);
  m.def(
      "measure_fronthaul_power",
      [](const py::object& cfg, int threads) {
        const SystemConfig c = config_from(cfg);
        RunOptions o;
        o.threads = threads;
        py::gil_scoped_release release;
        return measure_fronthaul_power(c, o);
      },
      py::arg("config") = py::none(), py::arg("threads") = 0);

  // Fronthaul building blocks.
  m.def("pack_upper", &pack_upper, py::arg("T"));
  m.def("chunk", &chunk, py::arg("x"), py::arg("M"));
  m.def("zf_precoder", &zf_precoder, py::arg("G"));
  m.def("expected_precoder_gram", &expected_precoder_gram, py::arg("gain"), py::arg("N"), py::arg("M"));
  m.def("phase_energy", &phase_energy, py::arg("second_moment"), py::arg("EWW"), py::arg("rho_c") = 1.0);
  m.def("scale_factor", &scale_factor, py::arg("powers"), py::arg("p_max"));

  // Detectors; `modulation` is "qpsk", "4qam" or "16qam".
  m.def(
      "lmmse_detect", [](const CMatrix& T, const CMatrix& t, double rho) { return lmmse_detect(T, t, rho); },
      py::arg("T"), py::arg("t"), py::arg("rho_ul"));
  m.def(
      "ls_detect", [](const CMatrix& T, const CMatrix& t, double rho) { return ls_detect(T, t, rho); },
      py::arg("T"), py::arg("t"), py::arg("rho_ul"));
  m.def(
      "ml_detect",
      [](const CMatrix& H, const CVector& y, double rho, const std::string& mod, bool sphere) {
        const Constellation cons = Constellation::from_name(mod);
        MlOptions o;
        o.sphere = sphere;
        const MlDecision d = ml_detect(H, y, rho, cons, o);
        return py::make_tuple(d.symbols, d.metric);
      },
      py::arg("H"), py::arg("y"), py::arg("rho_ul"), py::arg("modulation") = "qpsk", py::arg("sphere") = true,
      "Returns (symbol indices, metric).");
  m.def(
      "soft_llrs",
      [](const CMatrix& H, const CVector& y, double rho, const std::string& mod, bool max_log, bool sphere) {
        const Constellation cons = Constellation::from_name(mod);
        MlOptions o;
        o.sphere = sphere;
        return soft_llrs(H, y, rho, cons, max_log ? LlrMode::kMaxLog : LlrMode::kExact, o);
      },
      py::arg("H"), py::arg("y"), py::arg("rho_ul"), py::arg("modulation") = "qpsk", py::arg("max_log") = true,
      py::arg("sphere") = true, "Bit LLRs ln(P(1)/P(0)), user-major, MSB first.");

  auto ldpc = m.def_submodule("ldpc", "QC-LDPC codes and min-sum decoding");
  py::class_<ldpc::ParityCheckMatrix>(ldpc, "ParityCheckMatrix")
      .def_readonly("rows", &ldpc::ParityCheckMatrix::rows)
      .def_readonly("cols", &ldpc::ParityCheckMatrix::cols)
      .def_readonly("check_vars", &ldpc::ParityCheckMatrix::check_vars)
      .def("edges", &ldpc::ParityCheckMatrix::edges)
      .def("is_codeword", [](const ldpc::ParityCheckMatrix& H, const std::vector<std::uint8_t>& c) {
        return H.is_codeword(c);
      });
  ldpc.def("ieee80211_n1944_r12", [] { return ldpc::expand_prototype(ldpc::ieee80211_n1944_r12()); });
  ldpc.def("load_alist", &ldpc::load_alist, py::arg("path"));
  ldpc.def("parse_alist", &ldpc::parse_alist, py::arg("text"));
  ldpc.def("to_alist", &ldpc::to_alist, py::arg("H"));
  ldpc.def("load_prototype_csv",
           [](const std::filesystem::path& p) { return ldpc::expand_prototype(ldpc::load_prototype_csv(p)); },
           py::arg("path"));
  py::class_<ldpc::Encoder>(ldpc, "Encoder")
      .def(py::init<const ldpc::ParityCheckMatrix&>(), py::arg("H"))
      .def_property_readonly("n", &ldpc::Encoder::n)
      .def_property_readonly("k", &ldpc::Encoder::k)
      .def("encode", [](const ldpc::Encoder& e, const std::vector<std::uint8_t>& msg) { return e.encode(msg); })
      .def("extract", [](const ldpc::Encoder& e, const std::vector<std::uint8_t>& c) { return e.extract(c); });
  ldpc.def(
      "decode",
      [](const std::vector<double>& llr, const ldpc::ParityCheckMatrix& H, int iters, double scale) {
        const ldpc::DecodeResult r = ldpc::decode_minsum(llr, H, iters, scale);
        return py::make_tuple(r.bits, r.converged, r.iterations);
      },
      py::arg("llr"), py::arg("H"), py::arg("max_iterations") = 50, py::arg("scale") = 0.75,
      "Normalized min-sum. Returns (bits, converged, iterations).");
}
