#include "dualgate/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "dualgate/errors.hpp"

namespace dualgate {

ExperimentConfig paper_preset() {
  ExperimentConfig c;
  const double mhz = 2.0 * kPi * 1e6;
  c.gate.trap = {1.6 * mhz, 1.7 * mhz, 0.2 * mhz};
  c.gate.measured_omega = std::array<double, 2>{1.601 * mhz, 1.582 * mhz};
  c.noise.tau_s = 2.6e-3;
  c.noise.tau_m = 4.1e-3;
  c.noise.heating_rate = kPaperHeatingRate;
  c.noise.spam = kPaperSpam;
  c.noise.laser_dephasing = true;
  c.noise.motional_dephasing = true;
  c.noise.heating = true;
  c.noise.off_resonant = true;
  c.protocol.seed = 20240611;
  return c;
}

// ---------------------------------------------------------------------------------------
// Gate
// ---------------------------------------------------------------------------------------

GateSetup prepare_gate(const GateConfig& cfg, double ion_mass_amu, PairType pair) {
  GateSetup s;
  ModePair modes;
  if (cfg.measured_omega) {
    ModeSpectrum spec = mode_spectrum(cfg.trap, *cfg.measured_omega);
    modes = spec.modes;
    s.mode_warning = spec.warning;
  } else {
    modes = mode_spectrum(cfg.trap);
  }
  const double dk = raman_wavevector(cfg.wavelength_m, cfg.beam_angle_rad);
  s.modes = with_lamb_dicke(modes, dk, ion_mass_amu * kAtomicMassUnit);
  s.schedule = plan_schedule(s.modes, pair, cfg.rabi_ratio, cfg.mu);
  s.drive.rabi = s.schedule.rabi;
  s.drive.mu = s.schedule.mu;
  s.drive.spin_phase = cfg.spin_phase;
  s.drive.motional_phase = cfg.motional_phase;
  s.drive.dk = dk;
  if (cfg.dt > 0) {
    s.dt = cfg.dt;
  } else {
    // The rate bound does not depend on the cutoff; the smallest space is enough.
    const MsHamiltonian probe(s.drive, s.modes, pair, CompositeSpace(1), cfg.model);
    s.dt = max_time_step(probe);
  }
  return s;
}

std::array<int, 2> initial_qubits(PairType pair) {
  return pair == PairType::kSD ? std::array<int, 2>{0, 1} : std::array<int, 2>{0, 0};
}

Vector4 target_bell_state(const GateSetup& setup, PairType pair) {
  const auto phi = effective_spin_phase(setup.drive, pair);
  Matrix4 ss;
  const Matrix2 a = pauli_phi(phi[0]);
  const Matrix2 b = pauli_phi(phi[1]);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) ss(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  const double chi = setup.schedule.chi;
  const Matrix4 u = std::cos(chi) * Matrix4::Identity() + cplx(0, std::sin(chi)) * ss;
  const auto q = initial_qubits(pair);
  return u.col(2 * q[0] + q[1]);
}

namespace {

GateResult run_once(PairType pair, const NoiseModel& noise, const GateConfig& cfg,
                    const GateSetup& setup, int n_max) {
  const CompositeSpace space(n_max);
  const auto q = initial_qubits(pair);
  const CompositeState psi0 = CompositeState::basis(space, q[0], q[1]);
  const CompositeState out = integrate_master(psi0, setup.drive, setup.modes, pair, noise,
                                              setup.schedule.duration, setup.dt, cfg.model);
  GateResult r;
  r.setup = setup;
  r.pair = pair;
  r.rho = partial_trace_motion(out);
  r.target = target_bell_state(setup, pair);
  r.fidelity = state_fidelity(r.rho, r.target);
  return r;
}

}  // namespace

GateResult run_gate(PairType pair, const NoiseModel& noise, const GateConfig& cfg,
                    double ion_mass_amu) {
  const GateSetup setup = prepare_gate(cfg, ion_mass_amu, pair);
  GateResult r = run_once(pair, noise, cfg, setup, cfg.n_max);
  r.truncation_shift = std::numeric_limits<double>::quiet_NaN();
  if (cfg.truncation_guard) {
    const GateResult wide = run_once(pair, noise, cfg, setup, cfg.n_max + 2);
    r.truncation_shift = std::abs(wide.fidelity - r.fidelity);
    if (r.truncation_shift > cfg.truncation_tolerance) {
      std::ostringstream os;
      os << "fidelity moved by " << r.truncation_shift << " when n_max went from "
         << cfg.n_max << " to " << cfg.n_max + 2 << "; raise n_max";
      throw TruncationError(os.str());
    }
  }
  return r;
}

// ---------------------------------------------------------------------------------------
// Measurement
// ---------------------------------------------------------------------------------------

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    tag};
  return std::mt19937_64(seq);
}

constexpr std::uint32_t kParityTag = 1;
constexpr std::uint32_t kPopulationTag = 2;
constexpr std::uint32_t kLeakTag = 3;

OutcomeCounts sample_counts(const std::array<double, 4>& p, int shots, std::mt19937_64& rng) {
  OutcomeCounts out{};
  std::uint64_t left = static_cast<std::uint64_t>(shots);
  double mass = 1.0;
  for (int k = 0; k < 3 && left > 0; ++k) {
    const double q = mass > 0 ? std::clamp(p[k] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::uint64_t> bin(left, q);
    out[k] = bin(rng);
    left -= out[k];
    mass -= p[k];
  }
  out[3] = left;
  return out;
}

std::array<double, 4> diagonal_probabilities(const Matrix4& rho) {
  std::array<double, 4> p{};
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    p[k] = std::max(rho(k, k).real(), 0.0);
    sum += p[k];
  }
  if (!(sum > 0)) throw InvalidArgument("density matrix has no weight on the qubit basis");
  for (double& v : p) v /= sum;
  return p;
}

Matrix4 kron2(const Matrix2& a, const Matrix2& b) {
  Matrix4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return out;
}

double parity_of(const std::array<double, 4>& p) { return p[0] + p[3] - p[1] - p[2]; }

}  // namespace

std::array<double, 4> populations(const Matrix4& rho, double eps_spam) {
  return apply_spam(diagonal_probabilities(rho), eps_spam);
}

std::vector<double> default_phases(int points) {
  if (points < 1) throw InvalidArgument("phase point count must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) out[k] = kPi * k / points;
  return out;
}

ParityScan parity_scan(const Matrix4& rho, const std::vector<double>& phases, PairType pair,
                       int shots, std::uint64_t seed, double eps_spam, double leak) {
  if (shots < 0) throw InvalidArgument("shots must be >= 0");
  const auto types = ion_types(pair);
  const double s1 = phase_sense(types[0]);
  const double s2 = phase_sense(types[1]);
  ParityScan scan;
  scan.phases = phases;
  scan.shots = shots;
  scan.seed = seed;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double phi = phases[i];
    const Matrix4 r = kron2(rotation(s1 * phi, kPi / 2), rotation(s2 * phi, kPi / 2));
    const Matrix4 rotated = r * rho * r.adjoint();
    const auto p = populations(rotated, eps_spam);
    if (shots == 0) {
      scan.parities.push_back(parity_of(p));
      scan.stderr_.push_back(0.0);
      continue;
    }
    auto rng = make_rng(seed, i, kParityTag);
    OutcomeCounts counts = sample_counts(p, shots, rng);
    if (leak > 0) counts = dd_postselect(counts, leak, seed, i);
    const double n = static_cast<double>(counts[0] + counts[1] + counts[2] + counts[3]);
    const double parity =
        (static_cast<double>(counts[0] + counts[3]) - static_cast<double>(counts[1] + counts[2])) /
        n;
    scan.parities.push_back(parity);
    scan.stderr_.push_back(std::sqrt(std::max(1.0 - parity * parity, 0.0) / n));
  }
  return scan;
}

ParityFit fit_parity(const ParityScan& scan) {
  const std::size_t n = scan.phases.size();
  if (scan.parities.size() != n || scan.stderr_.size() != n) {
    throw InvalidArgument("parity scan lists differ in length");
  }
  if (n < 6) throw InvalidArgument("parity fit needs at least 6 points");
  const auto [lo, hi] = std::minmax_element(scan.phases.begin(), scan.phases.end());
  const double coverage = (*hi - *lo) * static_cast<double>(n) / static_cast<double>(n - 1);
  if (coverage < kPi * (1 - 1e-9)) {
    throw InvalidArgument("parity scan does not cover a full period (pi)");
  }

  // Ordinary least squares. Weighting by sampled standard errors favours points that
  // happened to land near +-1 and biases the contrast up, so the per-point errors only
  // enter the covariance.
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = std::cos(2 * scan.phases[i]);
    x(i, 1) = std::sin(2 * scan.phases[i]);
    y(i) = scan.parities[i];
  }
  const Eigen::Matrix2d normal = x.transpose() * x;
  if (std::abs(normal.determinant()) < 1e-12 * normal.squaredNorm()) {
    throw InvalidArgument("parity scan phases do not determine both quadratures");
  }
  const Eigen::Matrix2d inv = normal.inverse();
  const Eigen::Vector2d ab = inv * (x.transpose() * y);
  const double rss = (y - x * ab).squaredNorm();

  Eigen::Matrix2d cov;
  if (scan.shots > 0) {
    const double floor = 1.0 / scan.shots;
    Eigen::Matrix2d mid = Eigen::Matrix2d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double sigma = std::max(scan.stderr_[i], floor);
      mid += sigma * sigma * x.row(i).transpose() * x.row(i);
    }
    cov = inv * mid * inv;
  } else {
    cov = inv * (rss / static_cast<double>(n - 2));
  }

  ParityFit f;
  const double a = ab(0);
  const double b = ab(1);
  f.contrast = std::hypot(a, b);
  f.phase = std::atan2(-b, a);
  f.residual_rms = std::sqrt(rss / static_cast<double>(n));
  if (f.contrast > 0) {
    const Eigen::Vector2d jc(a / f.contrast, b / f.contrast);
    const double c2 = f.contrast * f.contrast;
    const Eigen::Vector2d jp(b / c2, -a / c2);
    f.contrast_err = std::sqrt(std::max(jc.dot(cov * jc), 0.0));
    f.phase_err = std::sqrt(std::max(jp.dot(cov * jp), 0.0));
  }
  return f;
}

double bell_fidelity(double p_pop, double contrast) {
  if (!(p_pop >= 0 && p_pop <= 1) || !(contrast >= 0 && contrast <= 1)) {
    throw InvalidArgument("population and contrast must lie in [0, 1]");
  }
  return (p_pop + contrast) / 2;
}

Estimate bell_fidelity(const Estimate& p_pop, const Estimate& contrast) {
  return {bell_fidelity(p_pop.value, contrast.value),
          0.5 * std::sqrt(p_pop.err * p_pop.err + contrast.err * contrast.err)};
}

BellResult measure_bell(const Matrix4& rho, PairType pair, const ProtocolSettings& settings,
                        double eps_spam) {
  BellResult r;
  r.pair = pair;
  const bool odd = pair == PairType::kSD;
  const auto in_subspace = [odd](const auto& p) {
    return odd ? double(p[1]) + double(p[2]) : double(p[0]) + double(p[3]);
  };
  const auto p = populations(rho, eps_spam);
  if (settings.shots == 0) {
    r.p_pop = {in_subspace(p), 0.0};
  } else {
    auto rng = make_rng(settings.seed, 0, kPopulationTag);
    OutcomeCounts counts = sample_counts(p, settings.shots, rng);
    if (settings.leak > 0) counts = dd_postselect(counts, settings.leak, settings.seed, ~0ull);
    const double n = static_cast<double>(counts[0] + counts[1] + counts[2] + counts[3]);
    const double pp = in_subspace(counts) / n;
    r.p_pop = {pp, std::sqrt(pp * (1 - pp) / n)};
  }
  r.scan = parity_scan(rho, default_phases(settings.phase_points), pair, settings.shots,
                       settings.seed, eps_spam, settings.leak);
  r.fit = fit_parity(r.scan);
  // Shot noise can push a fitted contrast past 1.
  r.contrast = {std::min(r.fit.contrast, 1.0), r.fit.contrast_err};
  r.fidelity = bell_fidelity(r.p_pop, r.contrast);
  return r;
}

// ---------------------------------------------------------------------------------------
// Error budget
// ---------------------------------------------------------------------------------------

double spam_infidelity(double eps) {
  if (!(eps >= 0 && eps < 1)) throw InvalidArgument("spam probability must be in [0, 1)");
  const double pop = (1 - eps) * (1 - eps) + eps * eps;
  const double contrast = (1 - 2 * eps) * (1 - 2 * eps);
  return 1.0 - (pop + contrast) / 2;
}

double offres_infidelity(const ExperimentConfig& cfg) {
  const PairType pair = cfg.protocol.pair;
  if (pair == PairType::kSS) return 0.0;
  const GateSetup setup = prepare_gate(cfg.gate, cfg.atoms.ion_mass_amu, pair);
  std::vector<double> mode_hz;
  for (const auto& m : setup.modes) mode_hz.push_back(m.omega / (2 * kPi));
  // Single-ion Lamb-Dicke factor of the COM mode before participation.
  ModeSpec bare = setup.modes[0];
  bare.participation = {1.0, 1.0};
  const double eta = lamb_dicke(setup.drive.dk, cfg.atoms.ion_mass_amu * kAtomicMassUnit, bare)[0];
  const SpectatorReport rep = spectator_detunings(cfg.atoms, cfg.b_gauss, mode_hz, eta);
  const double rabi_d = pair == PairType::kSD ? setup.drive.rabi[1] : setup.drive.rabi[0];
  return offres_error(rep.lines, rabi_d / (2 * kPi));
}

namespace {

double channel_infidelity(const ExperimentConfig& cfg, Channel c) {
  const GateResult r = run_gate(cfg.protocol.pair, cfg.noise.only(c), cfg.gate,
                                cfg.atoms.ion_mass_amu);
  return 1.0 - r.fidelity;
}

BudgetRow row(const std::string& name, double value, double ref, double lo, double hi) {
  return {name, value, ref, lo, hi};
}

}  // namespace

ErrorBudget error_budget(const ExperimentConfig& cfg) {
  cfg.noise.validate();
  ErrorBudget b;
  b.pair = cfg.protocol.pair;
  const NoiseModel& n = cfg.noise;
  const double laser = n.laser_dephasing ? channel_infidelity(cfg, Channel::kLaserDephasing) : 0;
  const double motion =
      n.motional_dephasing ? channel_infidelity(cfg, Channel::kMotionalDephasing) : 0;
  const double heat = n.heating ? channel_infidelity(cfg, Channel::kHeating) : 0;
  const double offres = n.off_resonant ? offres_infidelity(cfg) : 0;
  b.rows.push_back(row("laser_dephasing", laser, 0.018, 0.009, 0.027));
  b.rows.push_back(row("motional_dephasing", motion, 0.011, 0.0055, 0.0165));
  b.rows.push_back(row("heating", heat, 0.004, 0.004 * 0.85, 0.004 * 1.15));
  b.rows.push_back(row("off_resonant", offres, 0.001, 1e-4, 1e-2));
  b.rows.push_back(row("spam", spam_infidelity(n.spam), 0.003, 0.0, 0.003));
  if (n.any_channel()) {
    b.total_infidelity =
        1.0 - run_gate(cfg.protocol.pair, n, cfg.gate, cfg.atoms.ion_mass_amu).fidelity;
  }
  return b;
}

double solve_heating_rate(const ExperimentConfig& cfg, double target) {
  if (!(target > 0 && target < 1)) throw InvalidArgument("target error must be in (0, 1)");
  ExperimentConfig c = cfg;
  c.noise.heating = true;
  const auto err = [&](double rate) {
    c.noise.heating_rate = rate;
    return channel_infidelity(c, Channel::kHeating) - target;
  };
  double x0 = 50.0;
  double x1 = 100.0;
  double f0 = err(x0);
  double f1 = err(x1);
  for (int it = 0; it < 30; ++it) {
    if (f1 == f0) break;
    const double x2 = std::max(x1 - f1 * (x1 - x0) / (f1 - f0), 0.0);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = err(x1);
    if (std::abs(f1) < 1e-9 * target || std::abs(x1 - x0) < 1e-9 * std::abs(x1)) return x1;
  }
  if (std::abs(f1) > 1e-6 * target) throw NotFound("heating-rate solve did not converge");
  return x1;
}

// ---------------------------------------------------------------------------------------
// Post-selection
// ---------------------------------------------------------------------------------------

OutcomeCounts dd_postselect(const OutcomeCounts& counts, double leak, std::uint64_t seed,
                            std::uint64_t stream) {
  if (!(leak >= 0 && leak < 1)) throw InvalidArgument("leak probability must be in [0, 1)");
  OutcomeCounts out = counts;
  if (leak > 0) {
    auto rng = make_rng(seed, stream, kLeakTag);
    for (auto& c : out) {
      std::binomial_distribution<std::uint64_t> keep(c, 1.0 - leak);
      c = keep(rng);
    }
  }
  if (out[0] + out[1] + out[2] + out[3] == 0) {
    throw EmptyResult("post-selection discarded every shot");
  }
  return out;
}

}  // namespace dualgate
