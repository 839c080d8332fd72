#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dualgate/config.hpp"
#include "dualgate/errors.hpp"
#include "dualgate/protocol.hpp"
#include "dualgate/zeeman.hpp"

namespace py = pybind11;
using namespace dualgate;

namespace {

QubitSpec qubit(const AtomicConstants& c, const std::string& type) {
  if (type == "S" || type == "s") return s_qubit(c);
  if (type == "D" || type == "d") return d_qubit(c);
  throw InvalidArgument("qubit type must be 'S' or 'D'");
}

PairType pair_of(const py::object& o) {
  if (py::isinstance<py::str>(o)) return parse_pair_type(o.cast<std::string>());
  return o.cast<PairType>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dual-type qubit Molmer-Sorensen gate simulator";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NotFound>(m, "NotFound", PyExc_RuntimeError);
  py::register_exception<StepSizeError>(m, "StepSizeError", PyExc_RuntimeError);
  py::register_exception<TruncationError>(m, "TruncationError", PyExc_RuntimeError);
  py::register_exception<LabelAmbiguity>(m, "LabelAmbiguity", PyExc_RuntimeError);
  py::register_exception<EmptyResult>(m, "EmptyResult", PyExc_RuntimeError);

  py::enum_<PairType>(m, "PairType")
      .value("SS", PairType::kSS)
      .value("DD", PairType::kDD)
      .value("SD", PairType::kSD);

  // --- atomic structure -----------------------------------------------------------------

  py::class_<AtomicConstants>(m, "AtomicConstants")
      .def(py::init<>())
      .def_readwrite("s12_a_hf_mhz", &AtomicConstants::s12_a_hf_mhz)
      .def_readwrite("d52_a_hf_mhz", &AtomicConstants::d52_a_hf_mhz)
      .def_readwrite("d52_b_quad_mhz", &AtomicConstants::d52_b_quad_mhz)
      .def_readwrite("s12_g_j", &AtomicConstants::s12_g_j)
      .def_readwrite("d52_g_j", &AtomicConstants::d52_g_j)
      .def_readwrite("g_i", &AtomicConstants::g_i)
      .def_readwrite("ion_mass_amu", &AtomicConstants::ion_mass_amu);

  m.def("load_atomic_constants", &load_atomic_constants, py::arg("path"));

  m.def(
      "qubit_frequency",
      [](const AtomicConstants& c, const std::string& type, double b) {
        return qubit_frequency(qubit(c, type), b);
      },
      py::arg("constants"), py::arg("qubit"), py::arg("b_gauss"),
      "Transition frequency in Hz of the 'S' or 'D' qubit.");
  m.def(
      "sensitivity",
      [](const AtomicConstants& c, const std::string& type, double b) {
        return sensitivity(qubit(c, type), b);
      },
      py::arg("constants"), py::arg("qubit"), py::arg("b_gauss"));
  m.def(
      "find_sweet_spot",
      [](const AtomicConstants& c, const std::string& type, double lo, double hi) {
        return find_sweet_spot(qubit(c, type), lo, hi);
      },
      py::arg("constants"), py::arg("qubit"), py::arg("lo_gauss"), py::arg("hi_gauss"));

  py::class_<SpectatorLine>(m, "SpectatorLine")
      .def_readonly("transition", &SpectatorLine::transition)
      .def_readonly("line", &SpectatorLine::line)
      .def_readonly("spectator_hz", &SpectatorLine::spectator_hz)
      .def_readonly("line_hz", &SpectatorLine::line_hz)
      .def_readonly("detuning_hz", &SpectatorLine::detuning_hz)
      .def_readonly("coupling", &SpectatorLine::coupling);
  py::class_<SpectatorReport>(m, "SpectatorReport")
      .def_readonly("b_gauss", &SpectatorReport::b_gauss)
      .def_readonly("qubit_hz", &SpectatorReport::qubit_hz)
      .def_readonly("lines", &SpectatorReport::lines)
      .def_readonly("min_detuning_hz", &SpectatorReport::min_detuning_hz);
  m.def(
      "spectator_detunings",
      [](const AtomicConstants& c, double b, const std::vector<double>& modes_hz,
         double sideband_coupling) {
        return spectator_detunings(c, b, modes_hz, sideband_coupling);
      },
      py::arg("constants"), py::arg("b_gauss"), py::arg("mode_freqs_hz"),
      py::arg("sideband_coupling") = 1.0);
  m.def("offres_error", &offres_error, py::arg("lines"), py::arg("rabi_hz"));

  // --- gate ------------------------------------------------------------------------------

  m.def("gate_time", &gate_time, py::arg("omega_c"), py::arg("omega_r"),
        "4 pi / |omega_c - omega_r|, angular frequencies in rad/s.");

  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init<>())
      .def_readwrite("tau_s", &NoiseModel::tau_s)
      .def_readwrite("tau_m", &NoiseModel::tau_m)
      .def_readwrite("heating_rate", &NoiseModel::heating_rate)
      .def_readwrite("spam", &NoiseModel::spam)
      .def_readwrite("laser_dephasing", &NoiseModel::laser_dephasing)
      .def_readwrite("motional_dephasing", &NoiseModel::motional_dephasing)
      .def_readwrite("heating", &NoiseModel::heating)
      .def_readwrite("off_resonant", &NoiseModel::off_resonant)
      .def_property(
          "collective_laser",
          [](const NoiseModel& n) { return n.laser_correlation == LaserCorrelation::kCollective; },
          [](NoiseModel& n, bool v) {
            n.laser_correlation = v ? LaserCorrelation::kCollective : LaserCorrelation::kIndependent;
          });

  py::class_<GateConfig>(m, "GateConfig")
      .def(py::init<>())
      .def_readwrite("rabi_ratio", &GateConfig::rabi_ratio)
      .def_readwrite("n_max", &GateConfig::n_max)
      .def_readwrite("dt", &GateConfig::dt)
      .def_readwrite("truncation_guard", &GateConfig::truncation_guard)
      .def_readwrite("truncation_tolerance", &GateConfig::truncation_tolerance)
      .def_readwrite("spin_phase", &GateConfig::spin_phase)
      .def_readwrite("motional_phase", &GateConfig::motional_phase)
      .def_readwrite("mu", &GateConfig::mu)
      .def_readwrite("measured_omega", &GateConfig::measured_omega)
      .def_property(
          "exact_displacement",
          [](const GateConfig& g) { return g.model == CouplingModel::kExactDisplacement; },
          [](GateConfig& g, bool v) {
            g.model = v ? CouplingModel::kExactDisplacement : CouplingModel::kFirstOrder;
          });

  py::class_<ProtocolSettings>(m, "ProtocolSettings")
      .def(py::init<>())
      .def_readwrite("shots", &ProtocolSettings::shots)
      .def_readwrite("phase_points", &ProtocolSettings::phase_points)
      .def_readwrite("seed", &ProtocolSettings::seed)
      .def_readwrite("pair", &ProtocolSettings::pair)
      .def_readwrite("leak", &ProtocolSettings::leak);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("atoms", &ExperimentConfig::atoms)
      .def_readwrite("b_gauss", &ExperimentConfig::b_gauss)
      .def_readwrite("gate", &ExperimentConfig::gate)
      .def_readwrite("noise", &ExperimentConfig::noise)
      .def_readwrite("protocol", &ExperimentConfig::protocol);

  m.def("paper_preset", &paper_preset);
  m.def(
      "parse_config", [](const std::string& path) { return parse_config(path).experiment; },
      py::arg("path"));

  m.def(
      "calibrate",
      [](const ExperimentConfig& cfg, const py::object& pair) {
        const GateSetup s = prepare_gate(cfg.gate, cfg.atoms.ion_mass_amu, pair_of(pair));
        py::dict d;
        d["duration"] = s.schedule.duration;
        d["mu"] = s.schedule.mu;
        d["rabi"] = s.schedule.rabi;
        d["chi"] = s.schedule.chi;
        d["dt"] = s.dt;
        d["mode_omega"] = std::array<double, 2>{s.modes[0].omega, s.modes[1].omega};
        d["eta"] = std::array<std::array<double, 2>, 2>{s.modes[0].eta, s.modes[1].eta};
        return d;
      },
      py::arg("config"), py::arg("pair"));

  py::class_<GateResult>(m, "GateResult")
      .def_readonly("rho", &GateResult::rho)
      .def_readonly("target", &GateResult::target)
      .def_readonly("fidelity", &GateResult::fidelity)
      .def_readonly("truncation_shift", &GateResult::truncation_shift)
      .def_property_readonly("duration",
                             [](const GateResult& r) { return r.setup.schedule.duration; })
      .def_property_readonly("chi", [](const GateResult& r) { return r.setup.schedule.chi; });

  m.def(
      "run_gate",
      [](const py::object& pair, const NoiseModel& noise, const ExperimentConfig& cfg) {
        py::gil_scoped_release release;
        return run_gate(pair_of(pair), noise, cfg.gate, cfg.atoms.ion_mass_amu);
      },
      py::arg("pair"), py::arg("noise"), py::arg("config"));

  // --- measurement -----------------------------------------------------------------------

  m.def("apply_spam", &apply_spam, py::arg("probabilities"), py::arg("eps"));
  m.def("populations", &populations, py::arg("rho"), py::arg("eps_spam") = 0.0);
  m.def("bell_fidelity", py::overload_cast<double, double>(&bell_fidelity), py::arg("p_pop"),
        py::arg("contrast"));
  m.def("default_phases", &default_phases, py::arg("points") = 16);

  py::class_<ParityScan>(m, "ParityScan")
      .def(py::init<>())
      .def_readwrite("phases", &ParityScan::phases)
      .def_readwrite("parities", &ParityScan::parities)
      .def_readwrite("stderr", &ParityScan::stderr_)
      .def_readwrite("shots", &ParityScan::shots)
      .def_readwrite("seed", &ParityScan::seed);
  py::class_<ParityFit>(m, "ParityFit")
      .def_readonly("contrast", &ParityFit::contrast)
      .def_readonly("phase", &ParityFit::phase)
      .def_readonly("contrast_err", &ParityFit::contrast_err)
      .def_readonly("phase_err", &ParityFit::phase_err)
      .def_readonly("residual_rms", &ParityFit::residual_rms);

  m.def(
      "parity_scan",
      [](const Matrix4& rho, const std::vector<double>& phases, const py::object& pair,
         int shots, std::uint64_t seed, double eps) {
        return parity_scan(rho, phases, pair_of(pair), shots, seed, eps);
      },
      py::arg("rho"), py::arg("phases"), py::arg("pair"), py::arg("shots") = 0,
      py::arg("seed") = 1, py::arg("eps_spam") = 0.0);
  m.def("fit_parity", &fit_parity, py::arg("scan"));

  // --- budget ----------------------------------------------------------------------------

  py::class_<BudgetRow>(m, "BudgetRow")
      .def_readonly("channel", &BudgetRow::channel)
      .def_readonly("infidelity", &BudgetRow::infidelity)
      .def_readonly("reference", &BudgetRow::reference)
      .def_readonly("band_lo", &BudgetRow::band_lo)
      .def_readonly("band_hi", &BudgetRow::band_hi)
      .def("in_band", &BudgetRow::in_band);
  py::class_<ErrorBudget>(m, "ErrorBudget")
      .def_readonly("rows", &ErrorBudget::rows)
      .def_readonly("total_infidelity", &ErrorBudget::total_infidelity);
  m.def(
      "error_budget",
      [](const ExperimentConfig& cfg) {
        py::gil_scoped_release release;
        return error_budget(cfg);
      },
      py::arg("config"));
  m.def("spam_infidelity", &spam_infidelity, py::arg("eps"));
}
