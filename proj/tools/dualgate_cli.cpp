// dualgate: reproduce the dual-type gate figures and tables as CSV plus a text report.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dualgate/config.hpp"
#include "dualgate/errors.hpp"
#include "dualgate/protocol.hpp"
#include "dualgate/zeeman.hpp"

namespace fs = std::filesystem;
using namespace dualgate;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kUsage = 2, kConfig = 3, kNumerical = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path = DUALGATE_DEFAULT_CONFIG;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_max;
  std::optional<int> shots;
  std::optional<std::string> pair;
};

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

RunConfig load(const Globals& g) {
  RunConfig cfg = parse_config(g.config_path);
  auto& x = cfg.experiment;
  if (g.seed) x.protocol.seed = *g.seed;
  if (g.n_max) {
    if (*g.n_max < 1) throw UsageError("--nmax must be >= 1");
    x.gate.n_max = *g.n_max;
  }
  if (g.shots) {
    if (*g.shots < 0) throw UsageError("--shots must be >= 0");
    x.protocol.shots = *g.shots;
  }
  if (g.pair) {
    try {
      x.protocol.pair = parse_pair_type(*g.pair);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  cfg.canonical = canonical_text(cfg);
  return cfg;
}

fs::path output_dir(const Globals& g) {
  if (!g.out_dir.empty()) return g.out_dir;
  if (const char* env = std::getenv("DUALGATE_OUT_DIR"); env && *env) return env;
  return ".";
}

class Csv {
 public:
  Csv(const Globals& g, const RunConfig& cfg, const std::string& command,
      const std::string& name)
      : path_(output_dir(g) / name) {
    fs::create_directories(path_.parent_path());
    body_ << "# dualgate " << DUALGATE_VERSION << '\n'
          << "# command=" << command << '\n'
          << "# config_hash=" << config_hash(cfg) << '\n'
          << "# seed=" << cfg.experiment.protocol.seed << '\n';
  }
  void meta(const std::string& k, const std::string& v) { body_ << "# " << k << '=' << v << '\n'; }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) body_ << (i ? "," : "") << cells[i];
    body_ << '\n';
  }
  void write() {
    std::ofstream f(path_, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path_.string());
    f << body_.str();
    std::cout << "wrote " << path_.string() << '\n';
  }

 private:
  fs::path path_;
  std::ostringstream body_;
};

// ---------------------------------------------------------------------------------------

struct LevelsArgs {
  std::optional<double> b_min, b_max, b_step;
};

void cmd_levels(const Globals& g, const LevelsArgs& a) {
  const RunConfig cfg = load(g);
  const auto& x = cfg.experiment;
  const double lo = a.b_min.value_or(cfg.levels.b_min);
  const double hi = a.b_max.value_or(cfg.levels.b_max);
  const double step = a.b_step.value_or(cfg.levels.b_step);
  if (!(lo >= 0) || !(hi >= lo) || !(step > 0)) {
    throw UsageError("field range needs 0 <= b-min <= b-max and b-step > 0");
  }
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 1'000'000) throw UsageError("field range has too many points");

  const QubitSpec sq = s_qubit(x.atoms);
  const QubitSpec dq = d_qubit(x.atoms);
  const auto spectators = default_spectators();
  const HyperfineManifold d = d52_manifold(x.atoms);
  const auto spectator_hz = [&](const SpectatorTransition& s, double b) {
    const LevelDiagram diag = diagonalize_manifold(d, b);
    return std::abs(diag.find(s.to).energy_hz - diag.find(s.from).energy_hz);
  };

  const double ref = x.b_gauss;
  const double s0 = qubit_frequency(sq, ref);
  const double d0 = qubit_frequency(dq, ref);
  std::vector<double> spec0;
  for (const auto& s : spectators) spec0.push_back(spectator_hz(s, ref));

  Csv csv(g, cfg, "levels", "levels.csv");
  csv.meta("reference_b_gauss", num(ref));
  csv.meta("f_S_ref_hz", num(s0));
  csv.meta("f_D_ref_hz", num(d0));
  std::vector<std::string> head = {"B_gauss", "f_S_shift_hz", "f_D_shift_hz"};
  for (const auto& s : spectators) head.push_back(s.name + "_shift_hz");
  csv.row(head);
  double best_b = lo;
  double best_slope = INFINITY;
  for (long i = 0; i < count; ++i) {
    const double b = lo + step * static_cast<double>(i);
    std::vector<std::string> r = {num(b), num(qubit_frequency(sq, b) - s0),
                                  num(qubit_frequency(dq, b) - d0)};
    for (std::size_t k = 0; k < spectators.size(); ++k) {
      r.push_back(num(spectator_hz(spectators[k], b) - spec0[k]));
    }
    csv.row(r);
    const double slope = std::abs(sensitivity(dq, b));
    if (slope < best_slope) {
      best_slope = slope;
      best_b = b;
    }
  }
  csv.write();
  std::cout << "rows: " << count << "\n"
            << "D-qubit flattest grid point: " << fixed(best_b, 3) << " G ("
            << fixed(best_slope, 1) << " Hz/G)\n";
}

void cmd_sweetspot(const Globals& g) {
  const RunConfig cfg = load(g);
  const auto& x = cfg.experiment;
  const QubitSpec sq = s_qubit(x.atoms);
  const QubitSpec dq = d_qubit(x.atoms);
  const double bstar = find_sweet_spot(dq, 5.0, 20.0);
  const double s_slope = sensitivity(sq, x.b_gauss);
  const double d_slope = sensitivity(dq, x.b_gauss);
  Csv csv(g, cfg, "sweetspot", "sweetspot.csv");
  csv.row({"quantity", "value", "unit"});
  csv.row({"d_sweet_spot", num(bstar), "G"});
  csv.row({"d_slope_at_sweet_spot", num(sensitivity(dq, bstar)), "Hz/G"});
  csv.row({"s_frequency", num(qubit_frequency(sq, x.b_gauss)), "Hz"});
  csv.row({"d_frequency", num(qubit_frequency(dq, x.b_gauss)), "Hz"});
  csv.row({"s_slope", num(s_slope), "Hz/G"});
  csv.row({"d_slope", num(d_slope), "Hz/G"});
  csv.write();
  std::cout << "D-qubit sweet spot: " << fixed(bstar, 4) << " G\n"
            << "at B = " << num(x.b_gauss) << " G:\n"
            << "  S qubit " << fixed(qubit_frequency(sq, x.b_gauss) / 1e6, 6) << " MHz, slope "
            << fixed(s_slope / 1e3, 3) << " kHz/G\n"
            << "  D qubit " << fixed(qubit_frequency(dq, x.b_gauss) / 1e6, 6) << " MHz, slope "
            << fixed(d_slope / 1e3, 3) << " kHz/G\n";
}

void cmd_modes(const Globals& g) {
  const RunConfig cfg = load(g);
  const auto& x = cfg.experiment;
  const GateSetup s = prepare_gate(x.gate, x.atoms.ion_mass_amu, x.protocol.pair);
  const ModePair harmonic = mode_spectrum(x.gate.trap);
  Csv csv(g, cfg, "modes", "modes.csv");
  csv.row({"mode", "freq_hz", "harmonic_freq_hz", "eta_ion1", "eta_ion2"});
  const char* names[2] = {"com", "rocking"};
  for (int k = 0; k < 2; ++k) {
    csv.row({names[k], num(s.modes[k].omega / (2 * kPi)), num(harmonic[k].omega / (2 * kPi)),
             num(s.modes[k].eta[0]), num(s.modes[k].eta[1])});
    std::cout << names[k] << ": " << fixed(s.modes[k].omega / (2e6 * kPi), 4)
              << " MHz (harmonic " << fixed(harmonic[k].omega / (2e6 * kPi), 4)
              << " MHz), eta = " << fixed(s.modes[k].eta[0], 5) << ", "
              << fixed(s.modes[k].eta[1], 5) << '\n';
  }
  csv.write();
  if (s.mode_warning) std::cout << "warning: " << *s.mode_warning << '\n';
}

void cmd_calibrate(const Globals& g) {
  const RunConfig cfg = load(g);
  const auto& x = cfg.experiment;
  const PairType pair = x.protocol.pair;
  const GateSetup s = prepare_gate(x.gate, x.atoms.ion_mass_amu, pair);
  Csv csv(g, cfg, "calibrate", "calibrate.csv");
  csv.row({"quantity", "value", "unit"});
  csv.row({"pair", to_string(pair), ""});
  csv.row({"gate_time", num(s.schedule.duration), "s"});
  csv.row({"mu_over_2pi", num(s.schedule.mu / (2 * kPi)), "Hz"});
  csv.row({"rabi1_over_2pi", num(s.schedule.rabi[0] / (2 * kPi)), "Hz"});
  csv.row({"rabi2_over_2pi", num(s.schedule.rabi[1] / (2 * kPi)), "Hz"});
  csv.row({"chi", num(s.schedule.chi), "rad"});
  csv.row({"dt", num(s.dt), "s"});
  csv.write();
  std::cout << "pair " << to_string(pair) << ": T = " << fixed(s.schedule.duration * 1e6, 3)
            << " us, mu/2pi = " << fixed(s.schedule.mu / (2e6 * kPi), 5) << " MHz\n"
            << "Omega/2pi = (" << fixed(s.schedule.rabi[0] / (2e3 * kPi), 3) << ", "
            << fixed(s.schedule.rabi[1] / (2e3 * kPi), 3) << ") kHz, chi(T) = "
            << fixed(s.schedule.chi, 6) << " rad\n";
}

void write_scan(const Globals& g, const RunConfig& cfg, const std::string& command,
                const ParityScan& scan, const ParityFit& fit) {
  Csv csv(g, cfg, command, "parity_" + to_string(cfg.experiment.protocol.pair) + ".csv");
  csv.meta("shots", std::to_string(scan.shots));
  csv.meta("contrast", num(fit.contrast));
  csv.meta("contrast_err", num(fit.contrast_err));
  csv.meta("phase_offset", num(fit.phase));
  csv.row({"phase_rad", "parity", "stderr"});
  for (std::size_t i = 0; i < scan.phases.size(); ++i) {
    csv.row({num(scan.phases[i]), num(scan.parities[i]), num(scan.stderr_[i])});
  }
  csv.write();
}

std::string channel_list(const NoiseModel& n) {
  std::string out;
  const auto add = [&](bool on, const char* name) {
    if (on) out += (out.empty() ? "" : ", ") + std::string(name);
  };
  add(n.laser_dephasing, "laser_dephasing");
  add(n.motional_dephasing, "motional_dephasing");
  add(n.heating, "heating");
  return out.empty() ? "none" : out;
}

void cmd_gate(const Globals& g) {
  const RunConfig cfg = load(g);
  const auto& x = cfg.experiment;
  const PairType pair = x.protocol.pair;
  GateResult r;
  try {
    r = run_gate(pair, x.noise, x.gate, x.atoms.ion_mass_amu);
  } catch (const StepSizeError& e) {
    throw StepSizeError(std::string(e.what()) + " [channels: " + channel_list(x.noise) + "]");
  }
  const auto& s = r.setup;
  ProtocolSettings analytic = x.protocol;
  analytic.shots = 0;
  const BellResult exact = measure_bell(r.rho, pair, analytic, x.noise.spam);

  std::cout << "pair " << to_string(pair) << '\n'
            << "T = " << fixed(s.schedule.duration * 1e6, 3) << " us\n"
            << "Omega/2pi = (" << fixed(s.drive.rabi[0] / (2e3 * kPi), 3) << ", "
            << fixed(s.drive.rabi[1] / (2e3 * kPi), 3) << ") kHz\n";
  const char* names[2] = {"com", "rocking"};
  for (int k = 0; k < 2; ++k) {
    std::cout << "eta " << names[k] << " = (" << fixed(s.modes[k].eta[0], 5) << ", "
              << fixed(s.modes[k].eta[1], 5) << ")\n";
  }
  if (s.mode_warning) std::cout << "warning: " << *s.mode_warning << '\n';
  std::cout << "state fidelity = " << fixed(r.fidelity, 6) << '\n';
  if (!std::isnan(r.truncation_shift)) {
    std::cout << "truncation shift (n_max " << x.gate.n_max << " -> " << x.gate.n_max + 2
              << ") = " << num(r.truncation_shift) << '\n';
  }
  std::cout << "analytic readout: P = " << fixed(exact.p_pop.value, 5)
            << ", C = " << fixed(exact.contrast.value, 5)
            << ", F = " << fixed(exact.fidelity.value, 5) << '\n';
  if (x.protocol.shots > 0) {
    const BellResult sampled = measure_bell(r.rho, pair, x.protocol, x.noise.spam);
    std::cout << "sampled (" << x.protocol.shots << " shots/point): P = "
              << fixed(sampled.p_pop.value, 4) << "(" << fixed(sampled.p_pop.err, 4)
              << "), C = " << fixed(sampled.contrast.value, 4) << "("
              << fixed(sampled.contrast.err, 4) << "), F = " << fixed(sampled.fidelity.value, 4)
              << "(" << fixed(sampled.fidelity.err, 4) << ")\n";
    write_scan(g, cfg, "gate", sampled.scan, sampled.fit);
  }
}

void cmd_parity(const Globals& g) {
  const RunConfig cfg = load(g);
  const auto& x = cfg.experiment;
  const PairType pair = x.protocol.pair;
  const GateResult r = run_gate(pair, x.noise, x.gate, x.atoms.ion_mass_amu);
  const ParityScan scan = parity_scan(r.rho, default_phases(x.protocol.phase_points), pair,
                                      x.protocol.shots, x.protocol.seed, x.noise.spam,
                                      x.protocol.leak);
  const ParityFit fit = fit_parity(scan);
  write_scan(g, cfg, "parity", scan, fit);
  std::cout << "contrast = " << fixed(fit.contrast, 5) << " +- " << fixed(fit.contrast_err, 5)
            << ", phase offset = " << fixed(fit.phase, 4) << " rad\n";
}

void cmd_budget(const Globals& g, bool solve_heating) {
  RunConfig cfg = load(g);
  auto& x = cfg.experiment;
  if (solve_heating) {
    x.noise.heating_rate = solve_heating_rate(x);
    cfg.canonical = canonical_text(cfg);
    std::cout << "back-solved heating rate: " << fixed(x.noise.heating_rate, 3)
              << " quanta/s per mode\n";
  }
  const ErrorBudget b = error_budget(x);
  Csv csv(g, cfg, "budget", "budget_" + to_string(b.pair) + ".csv");
  csv.meta("total_dynamical_infidelity", num(b.total_infidelity));
  csv.row({"channel", "infidelity", "tolerance_band"});
  std::cout << "error budget, pair " << to_string(b.pair) << '\n';
  for (const auto& r : b.rows) {
    const std::string band = "[" + num(r.band_lo) + ";" + num(r.band_hi) + "]";
    csv.row({r.channel, num(r.infidelity), band});
    std::cout << "  " << r.channel << std::string(20 - r.channel.size(), ' ')
              << fixed(100 * r.infidelity, 3) << " %   reference " << fixed(100 * r.reference, 1)
              << " %" << (r.in_band() ? "" : "   (outside band)") << '\n';
  }
  csv.write();
  std::cout << "  all dynamical channels: " << fixed(100 * b.total_infidelity, 3) << " %\n";
}

void cmd_offres(const Globals& g) {
  const RunConfig cfg = load(g);
  const auto& x = cfg.experiment;
  const GateSetup s = prepare_gate(x.gate, x.atoms.ion_mass_amu, x.protocol.pair);
  std::vector<double> mode_hz;
  for (const auto& m : s.modes) mode_hz.push_back(m.omega / (2 * kPi));
  ModeSpec bare = s.modes[0];
  bare.participation = {1.0, 1.0};
  const double eta = lamb_dicke(s.drive.dk, x.atoms.ion_mass_amu * kAtomicMassUnit, bare)[0];
  const SpectatorReport rep = spectator_detunings(x.atoms, x.b_gauss, mode_hz, eta);
  const double err = offres_infidelity(x);
  Csv csv(g, cfg, "offres", "offres.csv");
  csv.meta("min_detuning_hz", num(rep.min_detuning_hz));
  csv.meta("offres_error", num(err));
  csv.row({"transition", "line", "spectator_hz", "line_hz", "detuning_hz", "coupling"});
  for (const auto& l : rep.lines) {
    csv.row({l.transition, l.line, num(l.spectator_hz), num(l.line_hz), num(l.detuning_hz),
             num(l.coupling)});
  }
  csv.write();
  std::cout << "D qubit at " << num(x.b_gauss) << " G: " << fixed(rep.qubit_hz / 1e6, 6)
            << " MHz\n"
            << "minimum spectator detuning: " << fixed(rep.min_detuning_hz / 1e6, 4) << " MHz\n"
            << "off-resonant error estimate: " << num(err) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-type qubit entangling gate simulator"};
  app.set_version_flag("--version", DUALGATE_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "Configuration file")->capture_default_str();
  app.add_option("--out", g.out_dir, "Output directory (overrides DUALGATE_OUT_DIR)");
  app.add_option("--seed", g.seed, "Sampling seed");
  app.add_option("--nmax", g.n_max, "Fock cutoff per mode");
  app.add_option("--shots", g.shots, "Shots per point, 0 for exact expectation values");
  app.add_option("--pair", g.pair, "Qubit pair type")
      ->check(CLI::IsMember({"ss", "dd", "sd"}, CLI::ignore_case));

  LevelsArgs levels;
  auto* levels_cmd = app.add_subcommand("levels", "Qubit and spectator shifts versus field");
  levels_cmd->add_option("--b-min", levels.b_min, "Lowest field, G");
  levels_cmd->add_option("--b-max", levels.b_max, "Highest field, G");
  levels_cmd->add_option("--b-step", levels.b_step, "Field step, G");
  auto* sweet_cmd = app.add_subcommand("sweetspot", "D-qubit sweet spot and field sensitivities");
  auto* modes_cmd = app.add_subcommand("modes", "Motional modes and Lamb-Dicke factors");
  auto* cal_cmd = app.add_subcommand("calibrate", "Gate time, detuning and Rabi rates");
  auto* gate_cmd = app.add_subcommand("gate", "Run the gate and report the Bell fidelity");
  auto* parity_cmd = app.add_subcommand("parity", "Parity scan after the gate");
  bool solve_heating = false;
  auto* budget_cmd = app.add_subcommand("budget", "Error budget by channel");
  budget_cmd->add_flag("--solve-heating", solve_heating,
                       "Back-solve the heating rate for a 0.4% heating row first");
  auto* offres_cmd = app.add_subcommand("offres", "Spectator detunings and off-resonant error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*levels_cmd) cmd_levels(g, levels);
    if (*sweet_cmd) cmd_sweetspot(g);
    if (*modes_cmd) cmd_modes(g);
    if (*cal_cmd) cmd_calibrate(g);
    if (*gate_cmd) cmd_gate(g);
    if (*parity_cmd) cmd_parity(g);
    if (*budget_cmd) cmd_budget(g, solve_heating);
    if (*offres_cmd) cmd_offres(g);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return kConfig;
  } catch (const StepSizeError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const TruncationError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const NotFound& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const LabelAmbiguity& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const EmptyResult& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
