#include "dualgate/ms_dynamics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "dualgate/errors.hpp"

namespace dualgate {

std::string to_string(PairType p) {
  switch (p) {
    case PairType::kSS: return "ss";
    case PairType::kDD: return "dd";
    case PairType::kSD: return "sd";
  }
  return "?";
}

PairType parse_pair_type(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ss") return PairType::kSS;
  if (lower == "dd") return PairType::kDD;
  if (lower == "sd") return PairType::kSD;
  throw InvalidArgument("pair type must be ss, dd or sd, got '" + s + "'");
}

std::array<QubitType, 2> ion_types(PairType p) {
  switch (p) {
    case PairType::kSS: return {QubitType::kS, QubitType::kS};
    case PairType::kDD: return {QubitType::kD, QubitType::kD};
    case PairType::kSD: return {QubitType::kS, QubitType::kD};
  }
  return {QubitType::kS, QubitType::kS};
}

double phase_sense(QubitType q) { return q == QubitType::kS ? 1.0 : -1.0; }

// ---------------------------------------------------------------------------------------

void TrapSpec::validate() const {
  if (!(omega_z > 0) || !(omega_x > omega_z) || !(omega_y > omega_z)) {
    throw InvalidArgument("trap frequencies must satisfy omega_x, omega_y > omega_z > 0");
  }
}

ModePair mode_spectrum(const TrapSpec& trap) {
  trap.validate();
  const double s = 1.0 / std::sqrt(2.0);
  ModeSpec com{ModeName::kCom, trap.omega_x, {s, s}, {0, 0}};
  ModeSpec rock{ModeName::kRocking,
                std::sqrt(trap.omega_x * trap.omega_x - trap.omega_z * trap.omega_z),
                {s, -s},
                {0, 0}};
  return {com, rock};
}

ModeSpectrum mode_spectrum(const TrapSpec& trap, const std::array<double, 2>& measured_omega) {
  ModeSpectrum out;
  out.modes = mode_spectrum(trap);
  for (int k = 0; k < 2; ++k) {
    if (!(measured_omega[k] > 0)) throw InvalidArgument("measured mode frequency must be > 0");
    out.harmonic_omega[k] = out.modes[k].omega;
    const double dev = std::abs(measured_omega[k] - out.modes[k].omega) / out.modes[k].omega;
    out.max_relative_deviation = std::max(out.max_relative_deviation, dev);
    out.modes[k].omega = measured_omega[k];
  }
  if (out.max_relative_deviation > 0.01) {
    std::ostringstream os;
    os << "measured mode frequencies deviate from the harmonic prediction by "
       << 100 * out.max_relative_deviation << "%";
    out.warning = os.str();
  }
  return out;
}

double raman_wavevector(double wavelength_m, double angle_rad) {
  if (!(wavelength_m > 0)) throw InvalidArgument("wavelength must be > 0");
  return 2.0 * (2.0 * kPi / wavelength_m) * std::cos(angle_rad);
}

std::array<double, 2> lamb_dicke(double dk, double mass_kg, const ModeSpec& mode) {
  if (!(dk > 0) || !(mass_kg > 0) || !(mode.omega > 0)) {
    throw InvalidArgument("Lamb-Dicke inputs must be positive");
  }
  const double x0 = std::sqrt(kHbar / (2.0 * mass_kg * mode.omega));
  return {dk * x0 * mode.participation[0], dk * x0 * mode.participation[1]};
}

ModePair with_lamb_dicke(ModePair modes, double dk, double mass_kg) {
  for (auto& m : modes) m.eta = lamb_dicke(dk, mass_kg, m);
  return modes;
}

double gate_time(double omega_c, double omega_r) {
  const double split = std::abs(omega_c - omega_r);
  if (!(split > 0)) throw InvalidArgument("mode frequencies are degenerate");
  return 4.0 * kPi / split;
}

double centered_detuning(const ModePair& modes) { return 0.5 * (modes[0].omega + modes[1].omega); }

// ---------------------------------------------------------------------------------------

void DriveSpec::validate() const {
  if (!(rabi[0] >= 0) || !(rabi[1] >= 0)) throw InvalidArgument("Rabi rates must be >= 0");
  if (!(mu > 0)) throw InvalidArgument("detuning mu must be > 0");
  if (!(dk > 0)) throw InvalidArgument("wave-vector difference must be > 0");
}

std::array<double, 2> effective_spin_phase(const DriveSpec& drive, PairType pair) {
  const auto types = ion_types(pair);
  return {phase_sense(types[0]) * drive.spin_phase[0], phase_sense(types[1]) * drive.spin_phase[1]};
}

namespace {

void check_lamb_dicke(const ModeSpec& mode, double nbar) {
  const double eta = std::max(std::abs(mode.eta[0]), std::abs(mode.eta[1]));
  if (eta * std::sqrt(nbar + 1.0) >= kLambDickeLimit) {
    throw InvalidArgument("outside the Lamb-Dicke regime (eta sqrt(nbar+1) >= 0.3)");
  }
}

// (delta t - sin(delta t)) / delta^2, continuous through delta = 0.
double phase_kernel(double delta, double t) {
  const double x = delta * t;
  if (std::abs(x) < 0.1) {
    const double x2 = x * x;
    return t * t * x * (1.0 / 6 - x2 * (1.0 / 120 - x2 * (1.0 / 5040 - x2 / 362880)));
  }
  return (x - std::sin(x)) / (delta * delta);
}

}  // namespace

DisplacementBranches displacement_trajectory(const DriveSpec& drive, const ModeSpec& mode,
                                             double t, double nbar) {
  check_lamb_dicke(mode, nbar);
  const double delta = drive.mu - mode.omega;
  DisplacementBranches out;
  out.resonant = delta == 0.0;
  const cplx phase = std::polar(1.0, drive.motional_phase);
  for (int b = 0; b < 4; ++b) {
    const double force = mode.eta[0] * drive.rabi[0] * kSpinBranches[b][0] +
                         mode.eta[1] * drive.rabi[1] * kSpinBranches[b][1];
    if (out.resonant) {
      out.alpha[b] = cplx(0, -0.5 * force * t) * phase;
    } else {
      out.alpha[b] = 0.5 * force * phase * (1.0 - std::polar(1.0, delta * t)) / delta;
    }
  }
  return out;
}

double geometric_phase(const DriveSpec& drive, const ModePair& modes, double t) {
  double chi = 0.0;
  for (const auto& m : modes) {
    check_lamb_dicke(m, 0.0);
    const double delta = drive.mu - m.omega;
    chi += m.eta[0] * m.eta[1] * phase_kernel(delta, t);
  }
  return kPhasePrefactor * drive.rabi[0] * drive.rabi[1] * chi;
}

namespace {

double unit_phase(const ModePair& modes, double mu, double duration) {
  DriveSpec unit;
  unit.rabi = {1.0, 1.0};
  unit.mu = mu;
  return geometric_phase(unit, modes, duration);
}

}  // namespace

RabiPair calibrate_rabi(const ModePair& modes, double mu, double duration, double ratio) {
  if (!(ratio > 0)) throw InvalidArgument("Rabi ratio must be > 0");
  if (!(duration > 0)) throw InvalidArgument("gate duration must be > 0");
  const double g = unit_phase(modes, mu, duration);
  if (g == 0.0 || !std::isfinite(g)) {
    throw InvalidArgument("geometric phase vanishes for these modes; cannot calibrate");
  }
  const double product = (kPi / 4) / std::abs(g);
  const double omega_s = std::sqrt(product / ratio);
  return {omega_s, omega_s * ratio};
}

GateSchedule plan_schedule(const ModePair& modes, PairType pair, double ratio,
                           std::optional<double> mu_override,
                           std::optional<double> duration_override) {
  GateSchedule s;
  s.mu = mu_override.value_or(centered_detuning(modes));
  s.duration = duration_override.value_or(gate_time(modes[0].omega, modes[1].omega));
  const RabiPair r = calibrate_rabi(modes, s.mu, s.duration, pair == PairType::kSD ? ratio : 1.0);
  s.rabi = {r.omega_s, r.omega_d};
  if (pair == PairType::kDD) s.rabi = {r.omega_d, r.omega_d};
  DriveSpec d;
  d.rabi = s.rabi;
  d.mu = s.mu;
  s.chi = geometric_phase(d, modes, s.duration);
  return s;
}

// ---------------------------------------------------------------------------------------
// MsHamiltonian
// ---------------------------------------------------------------------------------------

namespace {

// exp(beta a^dag - beta* a) on the truncated Fock space.
Matrix displacement(const Matrix& a, cplx beta) {
  const Matrix gen = beta * a.adjoint() - std::conj(beta) * a;
  // i * gen is Hermitian.
  Eigen::SelfAdjointEigenSolver<Matrix> es(cplx(0, 1) * gen);
  const Eigen::VectorXd lam = es.eigenvalues();
  Vector phases(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k) phases(k) = std::polar(1.0, -lam(k));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

MsHamiltonian::MsHamiltonian(const DriveSpec& drive, const ModePair& modes, PairType pair,
                             const CompositeSpace& space, CouplingModel model)
    : space_(space), model_(model), mu_(drive.mu), motional_phase_(drive.motional_phase) {
  drive.validate();
  const auto phi = effective_spin_phase(drive, pair);
  const Matrix a = ladder(space.n_max());
  const int n = space.total_dim();

  if (model == CouplingModel::kFirstOrder) {
    std::array<Matrix, 2> sigma = {embed(pauli_phi(phi[0]), Slot::kIon1, space).matrix(),
                                   embed(pauli_phi(phi[1]), Slot::kIon2, space).matrix()};
    for (int k = 0; k < 2; ++k) {
      delta_[k] = drive.mu - modes[k].omega;
      const Matrix ak = embed(a, k == 0 ? Slot::kModeCom : Slot::kModeRocking, space).matrix();
      Matrix spin = Matrix::Zero(n, n);
      for (int i = 0; i < 2; ++i) spin += 0.5 * modes[k].eta[i] * drive.rabi[i] * sigma[i];
      const Matrix term = spin * ak;
      lowering_terms_[k] = term.sparseView(cplx(0.0), 1e-300);
      raising_terms_[k] = SparseMatrix(lowering_terms_[k].adjoint());
      max_rate_ = std::max(max_rate_, std::abs(delta_[k]));
    }
    max_rate_ = std::max({max_rate_, drive.rabi[0], drive.rabi[1]});
    return;
  }

  // Exact displacement: H(t) = cos(mu t) R(t) H_base R(t)^dag with R = exp(-i t sum omega_k n_k).
  Matrix2 raise = Matrix2::Zero();
  raise(1, 0) = 1.0;
  exact_base_ = Matrix::Zero(n, n);
  const Matrix id_m = Matrix::Identity(space.fock_dim(), space.fock_dim());
  for (int i = 0; i < 2; ++i) {
    const cplx phase_factor = std::polar(1.0, drive.motional_phase);
    const Matrix dc = displacement(a, cplx(0, modes[0].eta[i]) * phase_factor);
    const Matrix dr = displacement(a, cplx(0, modes[1].eta[i]) * phase_factor);
    const Matrix motion = embed(dc - id_m, Slot::kModeCom, space).matrix() *
                              embed(dr, Slot::kModeRocking, space).matrix() +
                          embed(dr - id_m, Slot::kModeRocking, space).matrix();
    const Matrix spin =
        embed(std::polar(1.0, phi[i] - kPi / 2) * raise, i == 0 ? Slot::kIon1 : Slot::kIon2, space)
            .matrix();
    const Matrix term = drive.rabi[i] * spin * motion;
    exact_base_ += term + term.adjoint();
  }
  frame_freq_.resize(n);
  for (int q = 0; q < 4; ++q) {
    for (int nc = 0; nc <= space.n_max(); ++nc) {
      for (int nr = 0; nr <= space.n_max(); ++nr) {
        frame_freq_(space.index(q / 2, q % 2, nc, nr)) = modes[0].omega * nc + modes[1].omega * nr;
      }
    }
  }
  max_rate_ = std::max({drive.mu + std::max(modes[0].omega, modes[1].omega), drive.rabi[0],
                        drive.rabi[1]});
}

template <typename M>
void MsHamiltonian::apply_impl(double t, const M& in, M& out) const {
  if (model_ == CouplingModel::kFirstOrder) {
    out.setZero(in.rows(), in.cols());
    for (int k = 0; k < 2; ++k) {
      const cplx e = std::polar(1.0, -(delta_[k] * t + motional_phase_));
      out.noalias() += e * (lowering_terms_[k] * in);
      out.noalias() += std::conj(e) * (raising_terms_[k] * in);
    }
    return;
  }
  Vector rot(frame_freq_.size());
  for (Eigen::Index j = 0; j < frame_freq_.size(); ++j) rot(j) = std::polar(1.0, -frame_freq_(j) * t);
  const M tmp = rot.conjugate().asDiagonal() * in;
  out.noalias() = std::cos(mu_ * t) * (rot.asDiagonal() * (exact_base_ * tmp));
}

void MsHamiltonian::apply(double t, const Matrix& in, Matrix& out) const { apply_impl(t, in, out); }
void MsHamiltonian::apply(double t, const Vector& in, Vector& out) const { apply_impl(t, in, out); }

Matrix MsHamiltonian::dense(double t) const {
  const int n = space_.total_dim();
  Matrix out(n, n);
  apply(t, Matrix(Matrix::Identity(n, n)), out);
  return out;
}

Operator build_hamiltonian(const DriveSpec& drive, const ModePair& modes, PairType pair,
                           const CompositeSpace& space, double t, CouplingModel model) {
  const MsHamiltonian h(drive, modes, pair, space, model);
  return Operator::hermitian(space, h.dense(t));
}

double max_time_step(const MsHamiltonian& h) {
  if (h.max_rate() <= 0) return std::numeric_limits<double>::infinity();
  return 2.0 * kPi / (50.0 * h.max_rate());
}

// ---------------------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------------------

namespace {

void rk4_segment(const MsHamiltonian& h, Vector& psi, double t0, double t1, double dt_max) {
  if (t1 <= t0) return;
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / dt_max - 1e-9));
  const double dt = (t1 - t0) / static_cast<double>(steps);
  const cplx mi(0, -1);
  Vector k1, k2, k3, k4, tmp;
  for (long s = 0; s < steps; ++s) {
    const double t = t0 + dt * static_cast<double>(s);
    h.apply(t, psi, k1);
    k1 *= mi;
    tmp = psi + 0.5 * dt * k1;
    h.apply(t + 0.5 * dt, tmp, k2);
    k2 *= mi;
    tmp = psi + 0.5 * dt * k2;
    h.apply(t + 0.5 * dt, tmp, k3);
    k3 *= mi;
    tmp = psi + dt * k3;
    h.apply(t + dt, tmp, k4);
    k4 *= mi;
    psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  const double drift = std::abs(psi.norm() - 1.0);
  if (!(drift <= kNormDriftLimit)) {
    std::ostringstream os;
    os << "norm drift " << drift << " exceeds " << kNormDriftLimit << " at t=" << t1
       << " s; reduce dt";
    throw StepSizeError(os.str());
  }
}

void check_dt(const MsHamiltonian& h, double dt) {
  if (!(dt > 0)) throw InvalidArgument("time step must be > 0");
  const double bound = max_time_step(h);
  if (dt > bound * (1 + 1e-12)) {
    std::ostringstream os;
    os << "time step " << dt << " s exceeds the resolution bound " << bound << " s";
    throw InvalidArgument(os.str());
  }
}

}  // namespace

CompositeState propagate_unitary(const DriveSpec& drive, const ModePair& modes, PairType pair,
                                 const CompositeState& psi0, double duration, double dt,
                                 CouplingModel model) {
  const double t[] = {duration};
  return propagate_unitary_samples(drive, modes, pair, psi0, t, dt, model).front();
}

std::vector<CompositeState> propagate_unitary_samples(const DriveSpec& drive,
                                                      const ModePair& modes, PairType pair,
                                                      const CompositeState& psi0,
                                                      std::span<const double> times, double dt,
                                                      CouplingModel model) {
  if (!psi0.is_pure()) throw InvalidArgument("propagate_unitary needs a pure input state");
  const MsHamiltonian h(drive, modes, pair, psi0.space(), model);
  check_dt(h, dt);
  std::vector<CompositeState> out;
  out.reserve(times.size());
  Vector psi = psi0.vector();
  double t = 0.0;
  for (double target : times) {
    if (!(target >= t)) throw InvalidArgument("sample times must be ascending and >= 0");
    rk4_segment(h, psi, t, target, dt);
    t = target;
    out.push_back(CompositeState::pure(psi0.space(), psi / psi.norm()));
  }
  return out;
}

}  // namespace dualgate
