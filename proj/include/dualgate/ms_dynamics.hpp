#pragma once

#include <Eigen/Sparse>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualgate/quantum_core.hpp"
#include "dualgate/zeeman.hpp"

namespace dualgate {

inline constexpr double kHbar = 1.054571817e-34;       // J s
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

enum class PairType { kSS, kDD, kSD };

std::string to_string(PairType p);
PairType parse_pair_type(const std::string& s);  // "ss" | "dd" | "sd", case-insensitive

// Qubit type on (ion1, ion2). SD puts the S qubit on ion 1.
std::array<QubitType, 2> ion_types(PairType p);

// Sign with which the beam phase enters a qubit's rotation axis: +1 for S, -1 for D.
double phase_sense(QubitType q);

// ---------------------------------------------------------------------------------------
// Trap and modes
// ---------------------------------------------------------------------------------------

struct TrapSpec {
  double omega_x = 0.0;  // rad/s
  double omega_y = 0.0;
  double omega_z = 0.0;

  // omega_x, omega_y > omega_z > 0
  void validate() const;
};

enum class ModeName { kCom, kRocking };

struct ModeSpec {
  ModeName name = ModeName::kCom;
  double omega = 0.0;                     // rad/s
  std::array<double, 2> participation{};  // b_{i,k}
  std::array<double, 2> eta{};            // eta_{i,k}, zero until lamb_dicke() is applied
};

using ModePair = std::array<ModeSpec, 2>;

// COM at omega_x, rocking at sqrt(omega_x^2 - omega_z^2) for two equal-mass ions.
ModePair mode_spectrum(const TrapSpec& trap);

struct ModeSpectrum {
  ModePair modes;
  std::array<double, 2> harmonic_omega{};  // prediction before any override
  double max_relative_deviation = 0.0;     // |measured - predicted| / predicted
  std::optional<std::string> warning;      // set above 1% deviation
};

// Measured frequencies (rad/s, order com, rocking) replace the harmonic prediction.
ModeSpectrum mode_spectrum(const TrapSpec& trap, const std::array<double, 2>& measured_omega);

// 2 * (2 pi / lambda) * cos(angle) for counter-propagating beams at `angle` to the mode axis.
double raman_wavevector(double wavelength_m, double angle_rad);

// eta_{i,k} = dk * sqrt(hbar / (2 m omega_k)) * b_{i,k}
std::array<double, 2> lamb_dicke(double dk, double mass_kg, const ModeSpec& mode);
ModePair with_lamb_dicke(ModePair modes, double dk, double mass_kg);

// T = 4 pi / |omega_c - omega_r|
double gate_time(double omega_c, double omega_r);

// (omega_c + omega_r) / 2
double centered_detuning(const ModePair& modes);

// ---------------------------------------------------------------------------------------
// Drive and analytic dynamics
// ---------------------------------------------------------------------------------------

/// Bichromatic drive. `rabi` and `spin_phase` are per ion; spin phases are beam phases and
/// are multiplied by phase_sense() of the ion's qubit type before use.
struct DriveSpec {
  std::array<double, 2> rabi{};        // rad/s
  double mu = 0.0;                     // rad/s
  std::array<double, 2> spin_phase{};  // rad
  double motional_phase = 0.0;         // rad
  double dk = 0.0;                     // 1/m

  void validate() const;
};

// Spin-operator phase seen by each ion.
std::array<double, 2> effective_spin_phase(const DriveSpec& drive, PairType pair);

// Largest |eta| * sqrt(nbar + 1) allowed by the first-order expansion.
inline constexpr double kLambDickeLimit = 0.3;

struct DisplacementBranches {
  // Indexed by spin branch (s1, s2) in the order (+,+), (+,-), (-,+), (-,-), where s_i is the
  // eigenvalue of ion i's sigma_phi.
  std::array<cplx, 4> alpha{};
  bool resonant = false;  // delta_k == 0: linear growth, loop never closes
};

inline constexpr std::array<std::array<int, 2>, 4> kSpinBranches = {
    {{+1, +1}, {+1, -1}, {-1, +1}, {-1, -1}}};

/// Coherent amplitude of `mode` on each spin branch at time t:
///   alpha = (S/2) e^{i phi_m} (1 - e^{i delta t}) / delta,  S = sum_i eta_i Omega_i s_i.
DisplacementBranches displacement_trajectory(const DriveSpec& drive, const ModeSpec& mode,
                                             double t, double nbar = 0.0);

// chi = kPhasePrefactor * sum_k eta_1k eta_2k Omega_1 Omega_2 (t/delta_k - sin(delta_k t)/delta_k^2)
// generates exp(i chi sigma^(1) sigma^(2)). Pinned against the first-order propagator.
inline constexpr double kPhasePrefactor = 0.5;

double geometric_phase(const DriveSpec& drive, const ModePair& modes, double t);

struct RabiPair {
  double omega_s = 0.0;
  double omega_d = 0.0;
};

// Closed-form Rabi rates with |chi(T)| = pi/4 and omega_d / omega_s = ratio.
RabiPair calibrate_rabi(const ModePair& modes, double mu, double duration, double ratio = 1.0);

struct GateSchedule {
  double duration = 0.0;
  double mu = 0.0;
  std::array<double, 2> rabi{};  // per ion
  double chi_target = kPi / 4;
  double chi = 0.0;  // signed geometric phase at `duration`
};

/// Centered detuning, loop-closing duration and calibrated per-ion rates. Same-type pairs use
/// equal rates on both ions; SD applies `ratio` as Omega_D / Omega_S.
GateSchedule plan_schedule(const ModePair& modes, PairType pair, double ratio = 1.0,
                           std::optional<double> mu_override = std::nullopt,
                           std::optional<double> duration_override = std::nullopt);

// ---------------------------------------------------------------------------------------
// Hamiltonian and propagation
// ---------------------------------------------------------------------------------------

enum class CouplingModel {
  kFirstOrder,         // eta (a e^{-i delta t} + h.c.)
  kExactDisplacement,  // full displacement operator, bichromatic cos(mu t), no RWA on mu
};

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Interaction-picture MS Hamiltonian on the two-qubit, two-mode space.
///
/// First order:  H(t) = sum_{i,k} (eta_ik Omega_i / 2) sigma_{phi_i}^(i)
///                      (a_k e^{-i(delta_k t + phi_m)} + h.c.)
/// Exact:        H(t) = sum_i Omega_i cos(mu t) [e^{i(phi_i - pi/2)} sigma_+^(i)
///                      (prod_k D_k(i eta_ik e^{i phi_m} e^{-i omega_k t}) - 1) + h.c.]
/// The exact form reduces to the first-order one after expanding D to first order in eta and
/// dropping terms oscillating at 2 mu.
class MsHamiltonian {
 public:
  MsHamiltonian(const DriveSpec& drive, const ModePair& modes, PairType pair,
                const CompositeSpace& space, CouplingModel model = CouplingModel::kFirstOrder);

  const CompositeSpace& space() const { return space_; }
  CouplingModel model() const { return model_; }

  Matrix dense(double t) const;
  // out = H(t) * in, for a vector or a stack of column vectors.
  void apply(double t, const Matrix& in, Matrix& out) const;
  void apply(double t, const Vector& in, Vector& out) const;

  // Fastest rate the integrator has to resolve, rad/s.
  double max_rate() const { return max_rate_; }

 private:
  template <typename M>
  void apply_impl(double t, const M& in, M& out) const;

  CompositeSpace space_;
  CouplingModel model_;
  std::array<double, 2> delta_{};
  double mu_ = 0.0;
  double motional_phase_ = 0.0;
  std::array<SparseMatrix, 2> lowering_terms_;  // A_k = sum_i (eta Omega / 2) sigma_i a_k
  std::array<SparseMatrix, 2> raising_terms_;   // A_k^dag
  Matrix exact_base_;                           // exact model, rotating-frame-free part
  Eigen::VectorXd frame_freq_;                  // omega_c n_c + omega_r n_r per basis state
  double max_rate_ = 0.0;
};

Operator build_hamiltonian(const DriveSpec& drive, const ModePair& modes, PairType pair,
                           const CompositeSpace& space, double t,
                           CouplingModel model = CouplingModel::kFirstOrder);

// Step bound from the fastest rate: 2 pi / (50 * rate).
double max_time_step(const MsHamiltonian& h);

inline constexpr double kNormDriftLimit = 1e-6;

/// Fixed-step RK4 for d psi/dt = -i H(t) psi over [0, duration]. The step count is
/// ceil(duration / dt) so the last step lands on `duration`. Throws InvalidArgument when dt
/// exceeds max_time_step(), StepSizeError when the norm drifts by more than 1e-6.
CompositeState propagate_unitary(const DriveSpec& drive, const ModePair& modes, PairType pair,
                                 const CompositeState& psi0, double duration, double dt,
                                 CouplingModel model = CouplingModel::kFirstOrder);

// States at each of `times` (ascending, >= 0); segments between samples are stepped
// independently with the same dt bound.
std::vector<CompositeState> propagate_unitary_samples(
    const DriveSpec& drive, const ModePair& modes, PairType pair, const CompositeState& psi0,
    std::span<const double> times, double dt, CouplingModel model = CouplingModel::kFirstOrder);

}  // namespace dualgate
