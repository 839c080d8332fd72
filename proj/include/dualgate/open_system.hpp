#pragma once

#include <array>
#include <string>
#include <vector>

#include "dualgate/ms_dynamics.hpp"
#include "dualgate/quantum_core.hpp"

namespace dualgate {

enum class Channel { kLaserDephasing, kMotionalDephasing, kHeating };

std::string to_string(Channel c);

enum class LaserCorrelation {
  kIndependent,  // one sigma_z operator per ion
  kCollective,   // single operator s1 sigma_z1 + s2 sigma_z2, s = phase sense of each qubit
};

struct NoiseModel {
  double tau_s = 2.6e-3;         // s
  double tau_m = 4.1e-3;         // s
  double heating_rate = 0.0;     // quanta / s, per mode
  double spam = 0.0;             // per-qubit readout flip probability
  bool laser_dephasing = false;
  bool motional_dephasing = false;
  bool heating = false;
  // Off-resonant spectator excitation. Not part of the dynamics; enters the error budget
  // through the closed-form estimate only.
  bool off_resonant = false;
  LaserCorrelation laser_correlation = LaserCorrelation::kIndependent;

  void validate() const;
  bool any_channel() const { return laser_dephasing || motional_dephasing || heating; }

  // Copy with every dynamical channel off except `c`. SPAM and off_resonant are kept.
  NoiseModel only(Channel c) const;
  NoiseModel without_channels() const;
  // Everything off, including SPAM and the off-resonant estimate.
  static NoiseModel none() { return {}; }
};

struct Collapse {
  Operator op;
  double rate = 0.0;  // 1/s, multiplies c rho c^dag - {c^dag c, rho}/2
  Channel channel = Channel::kLaserDephasing;
  std::string label;
};

using CollapseSet = std::vector<Collapse>;

/// Jump operators for the enabled channels. Rates are set so that
///   a single-qubit coherence decays as exp(-t / tau_s)      (sigma_z, rate 1/(2 tau_s))
///   a (|0> + |1>)/sqrt(2) mode superposition as exp(-t / tau_m)  (n_k, rate 2/tau_m)
///   <n_k> grows as heating_rate * t                          (a_k^dag and a_k, rate ndot)
CollapseSet collapse_ops(const NoiseModel& noise, const CompositeSpace& space, PairType pair);

// -i[H, rho] + sum rate (c rho c^dag - {c^dag c, rho}/2). Dense reference form.
Matrix lindblad_rhs(const Matrix& rho, const Operator& h, const CollapseSet& collapses);

inline constexpr double kTraceDriftLimit = 1e-8;
inline constexpr double kNegativityLimit = 1e-6;

/// Fixed-step RK4 for the master equation with the MS Hamiltonian over [0, duration].
/// Uses the same step rule as propagate_unitary. Throws StepSizeError when the trace drifts
/// by more than 1e-8 or the smallest eigenvalue falls below -1e-6.
CompositeState integrate_master(const CompositeState& rho0, const DriveSpec& drive,
                                const ModePair& modes, PairType pair, const NoiseModel& noise,
                                double duration, double dt,
                                CouplingModel model = CouplingModel::kFirstOrder);

// Outcome order (00, 01, 10, 11); each bit flips independently with probability eps.
std::array<double, 4> apply_spam(const std::array<double, 4>& probabilities, double eps);

}  // namespace dualgate
