// Acceptance checks. One line per criterion; `--only N` runs a single one.

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dualgate/config.hpp"
#include "dualgate/errors.hpp"
#include "dualgate/ms_dynamics.hpp"
#include "dualgate/open_system.hpp"
#include "dualgate/protocol.hpp"
#include "dualgate/quantum_core.hpp"
#include "dualgate/zeeman.hpp"

using namespace dualgate;
namespace fs = std::filesystem;

namespace {

const std::string kData = DUALGATE_DATA_DIR;
constexpr double kTwoPi = 2 * kPi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Collects sub-checks; the criterion passes only when every one does.
struct Checks {
  bool ok = true;
  std::vector<std::string> notes;
  void add(bool pass, const std::string& what) {
    ok = ok && pass;
    notes.push_back(what + (pass ? "" : " FAIL"));
  }
  Outcome done() const {
    std::string s;
    for (std::size_t i = 0; i < notes.size(); ++i) s += (i ? "; " : "") + notes[i];
    return {ok, s};
  }
};

ExperimentConfig preset() { return parse_config(kData + "/paper-preset.cfg").experiment; }

GateConfig unguarded(int n_max) {
  GateConfig g = preset().gate;
  g.n_max = n_max;
  g.truncation_guard = false;
  return g;
}

// ---------------------------------------------------------------------------------------

Outcome gate_timing() {
  const double t = gate_time(kTwoPi * 1.601e6, kTwoPi * 1.582e6);
  const double us = t * 1e6;
  const double rounded = std::round(us * 10) / 10;
  return {rounded == 105.3, "T = " + fmt("%.4f", us) + " us"};
}

Outcome fidelity_arithmetic() {
  struct Row {
    const char* name;
    double p, c, f;
  };
  const Row rows[] = {{"SS", 0.982, 0.945, 0.9635}, {"DD", 0.976, 0.950, 0.963},
                      {"SD", 0.977, 0.950, 0.9635}};
  Checks c;
  for (const auto& r : rows) {
    const double f = bell_fidelity(r.p, r.c);
    c.add(std::abs(f - r.f) < 1e-12, std::string(r.name) + " " + fmt("%.4f", f));
  }
  return c.done();
}

// Branch (s1, s2) of sigma_x (x) sigma_x projected out of psi; motional amplitudes.
Vector branch(const CompositeSpace& space, const Vector& psi, int s1, int s2) {
  const int m = space.motional_dim();
  Vector out = Vector::Zero(m);
  const double c1[2] = {1 / std::sqrt(2.0), s1 / std::sqrt(2.0)};
  const double c2[2] = {1 / std::sqrt(2.0), s2 / std::sqrt(2.0)};
  for (int q1 = 0; q1 < 2; ++q1)
    for (int q2 = 0; q2 < 2; ++q2) out += c1[q1] * c2[q2] * psi.segment((q1 * 2 + q2) * m, m);
  return out;
}

Outcome ideal_gates() {
  Checks c;
  const GateConfig g = unguarded(5);
  const double mass = AtomicConstants{}.ion_mass_amu;
  for (PairType p : {PairType::kSS, PairType::kDD, PairType::kSD}) {
    const auto t0 = std::chrono::steady_clock::now();
    const GateResult r = run_gate(p, NoiseModel::none(), g, mass);
    ProtocolSettings exact;
    exact.shots = 0;
    const BellResult b = measure_bell(r.rho, p, exact, 0.0);

    // Geometric phase from the branch phases at 20 points through the gate.
    const GateSetup& s = r.setup;
    const CompositeSpace space(g.n_max);
    const auto q = initial_qubits(p);
    std::vector<double> times;
    for (int k = 1; k <= 20; ++k) times.push_back(s.schedule.duration * k / 20.0);
    const auto states = propagate_unitary_samples(
        s.drive, s.modes, p, CompositeState::basis(space, q[0], q[1]), times, s.dt);
    double worst = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const Vector& psi = states[k].vector();
      std::array<Vector, 4> br;
      for (int j = 0; j < 4; ++j)
        br[j] = branch(space, psi, kSpinBranches[j][0], kSpinBranches[j][1]);
      const cplx z = br[0](0) * br[3](0) * std::conj(br[1](0)) * std::conj(br[2](0));
      const double chi = geometric_phase(s.drive, s.modes, times[k]);
      worst = std::max(worst, std::abs(std::remainder(std::arg(z) - 4 * chi, kTwoPi) / 4));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.add(b.fidelity.value >= 0.999 && r.fidelity >= 0.999 && worst < 1e-4 && secs < 30,
          to_string(p) + " F=" + fmt("%.6f", b.fidelity.value) + " dchi=" + fmt("%.1e", worst) +
              " " + fmt("%.1fs", secs));
  }
  return c.done();
}

Outcome sweet_spot() {
  const AtomicConstants a = load_atomic_constants(kData + "/ba137_constants.txt");
  const double b = find_sweet_spot(d_qubit(a), 5.0, 20.0);
  const double s = sensitivity(s_qubit(a), 12.2);
  Checks c;
  c.add(std::abs(b - 12.3) <= 0.3, "D sweet spot " + fmt("%.4f", b) + " G");
  c.add(std::abs(s - 12e3) <= 0.15 * 12e3, "S slope " + fmt("%.0f", s) + " Hz/G");
  return c.done();
}

Outcome error_budget_check() {
  const ExperimentConfig cfg = preset();
  const ErrorBudget eb = error_budget(cfg);
  Checks c;
  for (const auto& row : eb.rows) {
    if (row.channel == "laser_dephasing") {
      c.add(std::abs(row.infidelity - 0.018) <= 0.5 * 0.018,
            "laser " + fmt("%.4f", row.infidelity));
    } else if (row.channel == "motional_dephasing") {
      c.add(std::abs(row.infidelity - 0.011) <= 0.5 * 0.011,
            "motional " + fmt("%.4f", row.infidelity));
    } else if (row.channel == "heating") {
      c.add(std::abs(row.infidelity - 0.004) <= 0.15 * 0.004,
            "heating " + fmt("%.4f", row.infidelity));
    }
  }
  const GateResult r = run_gate(PairType::kSD, cfg.noise, cfg.gate, cfg.atoms.ion_mass_amu);
  ProtocolSettings exact = cfg.protocol;
  exact.shots = 0;
  const BellResult analytic = measure_bell(r.rho, PairType::kSD, exact, cfg.noise.spam);
  const BellResult sampled = measure_bell(r.rho, PairType::kSD, cfg.protocol, cfg.noise.spam);
  c.add(std::abs(analytic.fidelity.value - 0.963) <= 0.015,
        "Bell F " + fmt("%.4f", analytic.fidelity.value) + " (sampled " +
            fmt("%.4f", sampled.fidelity.value) + ", state " + fmt("%.4f", r.fidelity) + ")");
  return c.done();
}

Outcome spectators() {
  const ExperimentConfig cfg = preset();
  const SpectatorReport rep = spectator_detunings(cfg.atoms, 12.2, {1.601e6, 1.582e6});
  const double err = offres_infidelity(cfg);
  Checks c;
  c.add(rep.min_detuning_hz > 0.5e6, "min detuning " + fmt("%.4f", rep.min_detuning_hz / 1e6) +
                                         " MHz");
  c.add(err >= 1e-4 && err <= 1e-2, "offres " + fmt("%.2e", err));
  return c.done();
}

// --- property suites -------------------------------------------------------------------

double breit_rabi(const AtomicConstants& c, double f, double m, double b) {
  constexpr double kMuB = 1.39962449361e6;
  const double a = c.s12_a_hf_mhz * 1e6;
  const double i = 1.5;
  const double de = a * (i + 0.5);
  const double x = (c.s12_g_j - c.g_i) * kMuB * b / de;
  const double base = -de / (2 * (2 * i + 1)) + c.g_i * kMuB * m * b;
  if (std::abs(m) > i) return base + 0.5 * de * (1 + (m > 0 ? x : -x));
  return base + (f > 1.5 ? 0.5 : -0.5) * de * std::sqrt(1 + 4 * m * x / (2 * i + 1) + x * x);
}

Matrix4 partial_bell(double c) {
  Vector4 phi = Vector4::Zero();
  phi(0) = phi(3) = 1 / std::sqrt(2.0);
  Matrix4 rho = c * phi * phi.adjoint();
  rho(0, 0) += (1 - c) / 2;
  rho(3, 3) += (1 - c) / 2;
  return rho;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

#ifdef DUALGATE_CLI
bool cli_reruns(std::string& note) {
  const fs::path dir = fs::temp_directory_path() / ("dualgate_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string body = slurp(kData + "/paper-preset.cfg");
  auto set = [&](const std::string& key, const std::string& value) {
    const auto pos = body.find("\n" + key + " ");
    const auto end = body.find('\n', pos + 1);
    body.replace(pos + 1, end - pos - 1, key + " = " + value);
  };
  set("atoms.constants_file", kData + "/ba137_constants.txt");
  set("numerics.n_max", "3");
  set("numerics.truncation_guard", "false");
  std::ofstream(dir / "run.cfg") << body;

  const std::pair<std::string, std::string> cases[] = {
      {"levels --b-min 11 --b-max 13 --b-step 0.25", "levels.csv"},
      {"sweetspot", "sweetspot.csv"},
      {"modes", "modes.csv"},
      {"calibrate", "calibrate.csv"},
      {"offres", "offres.csv"},
      {"parity", "parity_sd.csv"},
      {"budget", "budget_sd.csv"},
  };
  bool ok = true;
  int same = 0;
  for (const auto& [args, csv] : cases) {
    std::array<std::string, 2> out;
    for (int k = 0; k < 2; ++k) {
      const fs::path o = dir / ("run" + std::to_string(k));
      const std::string cmd = std::string(DUALGATE_CLI) + " --config " + (dir / "run.cfg").string() +
                              " --out " + o.string() + " " + args + " > /dev/null 2>&1";
      const int st = std::system(cmd.c_str());
      ok = ok && WIFEXITED(st) && WEXITSTATUS(st) == 0;
      out[k] = slurp(o / csv);
    }
    if (!out[0].empty() && out[0] == out[1]) ++same;
    else ok = false;
  }
  fs::remove_all(dir);
  note = "CLI " + std::to_string(same) + "/" + std::to_string(std::size(cases)) + " identical";
  return ok;
}
#endif

Outcome properties() {
  Checks c;
  const double mass = AtomicConstants{}.ion_mass_amu;

  {  // trace and Hermiticity under the full noise model
    const GateSetup g = prepare_gate(unguarded(3), mass, PairType::kSD);
    const CompositeSpace space(3);
    const CompositeState psi0 = CompositeState::basis(space, 0, 1);
    const NoiseModel n = preset().noise;
    std::array<Matrix, 3> r;
    for (int k = 0; k < 3; ++k)
      r[k] = integrate_master(psi0, g.drive, g.modes, PairType::kSD, n, g.schedule.duration,
                              g.dt / (1 << k))
                 .matrix();
    double drift = 0;
    for (const auto& m : r)
      drift = std::max({drift, std::abs(m.trace() - 1.0), hermiticity_defect(m)});
    std::mt19937 rng(7);
    std::normal_distribution<double> gauss;
    const CollapseSet ops = collapse_ops(n, space, PairType::kSD);
    const Operator h = build_hamiltonian(g.drive, g.modes, PairType::kSD, space, 3e-5);
    for (int trial = 0; trial < 5; ++trial) {
      Matrix a(space.total_dim(), space.total_dim());
      for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) a(i, j) = cplx(gauss(rng), gauss(rng));
      Matrix rho = a * a.adjoint();
      rho /= rho.trace();
      const Matrix d = lindblad_rhs(rho, h, ops);
      // The right-hand side carries units of 1/s; compare against its own scale.
      const double scale = d.cwiseAbs().maxCoeff();
      drift = std::max({drift, std::abs(d.trace()) / scale, hermiticity_defect(d) / scale});
    }
    c.add(drift < 1e-8, "trace/herm " + fmt("%.1e", drift));

    const double e1 = (r[0] - r[1]).cwiseAbs().maxCoeff();
    const double e2 = (r[1] - r[2]).cwiseAbs().maxCoeff();
    c.add(std::abs(e1 / e2 - 16) <= 0.2 * 16, "master halving " + fmt("%.1f", e1 / e2));
  }

  const GateSetup ss = prepare_gate(unguarded(6), mass, PairType::kSS);
  const double T = ss.schedule.duration;
  {  // loop closure
    double open = 0;
    for (const auto& m : ss.modes)
      for (cplx a : displacement_trajectory(ss.drive, m, T).alpha) open = std::max(open, std::abs(a));
    const CompositeSpace space(6);
    const CompositeState out = propagate_unitary(ss.drive, ss.modes, PairType::kSS,
                                                 CompositeState::basis(space, 0, 0), T, ss.dt);
    const double p = purity(partial_trace_motion(out));
    c.add(open < 1e-12 && p >= 1 - 1e-4,
          "|alpha(T)| " + fmt("%.1e", open) + ", purity " + fmt("%.7f", p));
  }
  {  // product scaling
    double worst = 0;
    for (double k : {0.3, 0.7, 1.9, 4.0}) {
      DriveSpec s = ss.drive;
      s.rabi = {k * ss.drive.rabi[0], ss.drive.rabi[1] / k};
      for (double t : {0.13 * T, 0.5 * T, T}) {
        const double ref = geometric_phase(ss.drive, ss.modes, t);
        worst = std::max(worst, std::abs(geometric_phase(s, ss.modes, t) - ref) / std::abs(ref));
      }
    }
    c.add(worst <= 1e-12, "chi scaling " + fmt("%.1e", worst));
  }
  {  // Breit-Rabi
    const AtomicConstants a = load_atomic_constants(kData + "/ba137_constants.txt");
    double worst = 0;
    for (double b = 0.0; b <= 50.0; b += 1.0)
      for (const auto& l : diagonalize_manifold(s12_manifold(a), b).levels) {
        const double ref = breit_rabi(a, l.label.f, l.label.m_f, b);
        worst = std::max(worst, std::abs(l.energy_hz - ref) / std::abs(ref));
      }
    c.add(worst < 1e-9, "Breit-Rabi " + fmt("%.1e", worst));
  }
  {  // unitary step halving
    const GateSetup g = prepare_gate(unguarded(3), mass, PairType::kSS);
    const CompositeSpace space(3);
    std::array<Vector, 3> v;
    for (int k = 0; k < 3; ++k)
      v[k] = propagate_unitary(g.drive, g.modes, PairType::kSS, CompositeState::basis(space, 0, 0),
                               g.schedule.duration, g.dt / (1 << k))
                 .vector();
    const double e1 = (v[0] - v[1]).cwiseAbs().maxCoeff();
    const double e2 = (v[1] - v[2]).cwiseAbs().maxCoeff();
    c.add(std::abs(e1 / e2 - 16) <= 0.2 * 16, "unitary halving " + fmt("%.1f", e1 / e2));
  }
  {  // parity fit coverage
    const Matrix4 rho = partial_bell(0.95);
    const auto phases = default_phases(16);
    int covered = 0;
    for (int seed = 1; seed <= 1000; ++seed) {
      const ParityFit f = fit_parity(parity_scan(rho, phases, PairType::kSS, 500, seed, 0.0));
      if (std::abs(f.contrast - 0.95) <= 3 * f.contrast_err) ++covered;
    }
    c.add(covered >= 990, "coverage " + std::to_string(covered) + "/1000");
  }
#ifdef DUALGATE_CLI
  {
    std::string note;
    const bool ok = cli_reruns(note);
    c.add(ok, note);
  }
#else
  c.add(false, "CLI not built");
#endif
  return c.done();
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Criterion> all = {
      {1, "gate timing", 1e-3, gate_timing},
      {2, "fidelity arithmetic", 1.0, fidelity_arithmetic},
      {3, "ideal-gate oracle", 90.0, ideal_gates},
      {4, "sweet spot", 5.0, sweet_spot},
      {5, "error budget", 300.0, error_budget_check},
      {6, "spectator detunings", 5.0, spectators},
      {7, "property suites", 600.0, properties},
  };

  bool all_ok = true;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    all_ok = all_ok && pass;
    std::printf("[%s] %d %s (%s; %s%s)\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(),
                secs < 1 ? fmt("%.3g ms", secs * 1e3).c_str() : fmt("%.2f s", secs).c_str(),
                in_time ? "" : " over budget");
    std::fflush(stdout);
  }
  return all_ok ? 0 : 1;
}
