#pragma once

#include <string>
#include <vector>

namespace dualgate {

// Bohr magneton over h, Hz per gauss (CODATA 2018).
inline constexpr double kBohrHzPerGauss = 1.39962449361e6;

/// Literature inputs for the 137Ba+ S1/2 and D5/2 manifolds.
///
/// The Zeeman term is H_Z = mu_B B (g_J J_z + g_I I_z); g_I is expressed in Bohr magnetons
/// and carries its sign explicitly.
struct AtomicConstants {
  double s12_a_hf_mhz = 4018.870833;
  double d52_a_hf_mhz = -12.02810;
  double d52_b_quad_mhz = 59.53309;
  double s12_g_j = 2.0024906;
  double d52_g_j = 1.200367;
  double g_i = -3.4033e-4;
  double ion_mass_amu = 136.9058271;
};

// Flat key=value file with keys s12.A_hf_mhz, d52.A_hf_mhz, d52.B_quad_mhz, s12.gJ,
// d52.gJ, gI, ion.mass_amu. All keys are required; unknown keys are rejected.
AtomicConstants load_atomic_constants(const std::string& path);

struct HyperfineManifold {
  std::string name;
  double j = 0.5;
  double i = 1.5;
  double a_hf_hz = 0.0;
  double b_quad_hz = 0.0;
  double g_j = 2.0;
  double g_i = 0.0;

  int dimension() const;
  // Rejects non-half-integer momenta and a quadrupole constant where J or I is 1/2.
  void validate() const;
};

HyperfineManifold s12_manifold(const AtomicConstants& c);
HyperfineManifold d52_manifold(const AtomicConstants& c);

// Adiabatic (F, m_F) label. Both values are stored exactly (integers or half-integers).
struct LevelLabel {
  double f = 0.0;
  double m_f = 0.0;
  bool operator==(const LevelLabel& o) const;
  std::string to_string() const;
};

struct Level {
  double energy_hz = 0.0;
  LevelLabel label;
  // Set when eigenvector tracking lost this label (overlap below threshold).
  bool ambiguous = false;
};

struct LevelDiagram {
  double b_gauss = 0.0;
  std::vector<Level> levels;  // grouped by m_F ascending, energies ascending within a block

  bool ambiguous() const;
  const Level& find(const LevelLabel& label) const;  // throws InvalidArgument if absent
};

struct TrackingOptions {
  double grid_step_gauss = 0.01;
  double min_overlap = 0.6;
};

LevelDiagram diagonalize_manifold(const HyperfineManifold& manifold, double b_gauss,
                                  const TrackingOptions& opts = {});

// Levels of one m_F block only. Negative fields are mapped through
// E_{F,m}(-B) = E_{F,-m}(B) so central differences can straddle B = 0.
std::vector<Level> block_levels(const HyperfineManifold& manifold, double m_f, double b_gauss,
                                const TrackingOptions& opts = {});

enum class QubitType { kS, kD };

struct QubitSpec {
  QubitType type = QubitType::kS;
  HyperfineManifold manifold;
  LevelLabel lower;
  LevelLabel upper;
};

// |0_S> = |F=1, m_F=0>, |1_S> = |F=2, m_F=0> in S1/2.
QubitSpec s_qubit(const AtomicConstants& c);
// |0_D> = |F=2, m_F=1>, |1_D> = |F=3, m_F=1> in D5/2.
QubitSpec d_qubit(const AtomicConstants& c);

// |E(upper) - E(lower)| in Hz. The D5/2 hyperfine order is inverted (A < 0), so the
// signed difference is negative there. Throws LabelAmbiguity if either label was lost.
double qubit_frequency(const QubitSpec& qubit, double b_gauss, const TrackingOptions& opts = {});

inline constexpr double kSensitivityStepGauss = 1e-3;

// d(nu)/dB by central difference with step 1e-3 G, Hz per gauss.
double sensitivity(const QubitSpec& qubit, double b_gauss);

// Zero of sensitivity() in [lo, hi] by bisection to 1e-4 G. Throws NotFound when the
// slope does not change sign across the range.
double find_sweet_spot(const QubitSpec& qubit, double lo_gauss, double hi_gauss,
                       double tol_gauss = 1e-4);

// ---------------------------------------------------------------------------------------
// Spectator transitions near the D qubit
// ---------------------------------------------------------------------------------------

struct SpectatorTransition {
  std::string name;
  LevelLabel from;
  LevelLabel to;
  double coupling = 1.0;  // relative to the D-qubit Raman Rabi rate
};

// |F=2,m_F=1> -> |F=1,m_F=0> and |F=3,m_F=1> -> |F=4,m_F=-1> in D5/2.
std::vector<SpectatorTransition> default_spectators();

struct SpectatorLine {
  std::string transition;
  std::string line;  // "carrier", "carrier+mode0", "carrier-mode0", ...
  double spectator_hz = 0.0;
  double line_hz = 0.0;
  double detuning_hz = 0.0;  // |spectator - line|
  double coupling = 1.0;     // relative coupling used by offres_error
};

struct SpectatorReport {
  double b_gauss = 0.0;
  double qubit_hz = 0.0;
  std::vector<SpectatorLine> lines;
  double min_detuning_hz = 0.0;
};

/// Detunings of each spectator transition from the D-qubit carrier and its motional
/// sidebands at carrier +/- mode frequency. A sideband pair carries
/// `sideband_coupling` times the spectator's own coupling.
SpectatorReport spectator_detunings(const AtomicConstants& c, double b_gauss,
                                    const std::vector<double>& mode_freqs_hz,
                                    double sideband_coupling = 1.0,
                                    const std::vector<SpectatorTransition>& spectators =
                                        default_spectators());

// Sum of time-averaged two-level excitations (c*Omega)^2 / (2((c*Omega)^2 + Delta^2)).
// Rabi frequency and detunings in the same (cyclic) units.
double offres_error(const std::vector<SpectatorLine>& lines, double rabi_hz);

}  // namespace dualgate
