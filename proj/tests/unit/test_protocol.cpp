#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dualgate/errors.hpp"
#include "dualgate/protocol.hpp"

using namespace dualgate;

namespace {

Vector4 bell(int a, int b, double theta) {
  Vector4 v = Vector4::Zero();
  v(a) = 1 / std::sqrt(2.0);
  v(b) = std::polar(1 / std::sqrt(2.0), theta);
  return v;
}

Matrix4 proj(const Vector4& v) { return v * v.adjoint(); }

GateConfig fast_gate(int n_max) {
  GateConfig g = paper_preset().gate;
  g.n_max = n_max;
  g.truncation_guard = false;
  return g;
}

// State with parity contrast c and no other structure after the analysis pulses.
Matrix4 partial_bell(double c) {
  Matrix4 rho = c * proj(bell(0, 3, kPi / 2));
  rho(0, 0) += 0.5 * (1 - c);
  rho(3, 3) += 0.5 * (1 - c);
  return rho;
}

ParityScan synthetic(double c, double phi0, int points) {
  ParityScan s;
  s.phases = default_phases(points);
  for (double p : s.phases) {
    s.parities.push_back(c * std::cos(2 * p + phi0));
    s.stderr_.push_back(0.0);
  }
  return s;
}

// Least-squares coefficients of 1, cos k phi, sin k phi (k = 1..3) and the residual.
std::pair<Eigen::VectorXd, double> harmonic_fit(const ParityScan& s) {
  const int n = static_cast<int>(s.phases.size());
  Eigen::MatrixXd a(n, 7);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double p = s.phases[i];
    a.row(i) << 1, std::cos(p), std::sin(p), std::cos(2 * p), std::sin(2 * p), std::cos(3 * p),
        std::sin(3 * p);
    y(i) = s.parities[i];
  }
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(y);
  return {x, (a * x - y).cwiseAbs().maxCoeff()};
}

}  // namespace

TEST_CASE("bell fidelity arithmetic") {
  CHECK(bell_fidelity(0.982, 0.945) == doctest::Approx(0.9635).epsilon(1e-14));
  CHECK(bell_fidelity(0.976, 0.950) == doctest::Approx(0.963).epsilon(1e-14));
  CHECK(bell_fidelity(0.977, 0.950) == doctest::Approx(0.9635).epsilon(1e-14));
  CHECK(bell_fidelity(1.0, 1.0) == 1.0);
  const Estimate f = bell_fidelity(Estimate{0.98, 0.003}, Estimate{0.95, 0.004});
  CHECK(f.value == doctest::Approx(0.965));
  CHECK(f.err == doctest::Approx(0.0025));
  CHECK_THROWS_AS(bell_fidelity(1.1, 0.9), InvalidArgument);
  CHECK_THROWS_AS(bell_fidelity(0.9, -0.1), InvalidArgument);
}

TEST_CASE("populations") {
  const auto p = populations(proj(bell(0, 3, 0.4)), 0.0);
  CHECK(p[0] + p[3] == doctest::Approx(1.0));
  for (double v : populations(Matrix4::Identity() / 4, 0.0)) CHECK(v == doctest::Approx(0.25));
  const auto q = populations(proj(bell(0, 3, 0.4)), 0.003);
  CHECK(q[1] == doctest::Approx(0.003 * 0.997));
}

TEST_CASE("preset and helpers") {
  const ExperimentConfig p = paper_preset();
  CHECK(p.noise.heating_rate == kPaperHeatingRate);
  CHECK(p.noise.spam == kPaperSpam);
  CHECK(p.noise.tau_s == 2.6e-3);
  CHECK(p.noise.tau_m == 4.1e-3);
  CHECK(p.protocol.pair == PairType::kSD);
  CHECK(p.gate.n_max == 7);
  CHECK(initial_qubits(PairType::kSD) == std::array<int, 2>{0, 1});
  CHECK(initial_qubits(PairType::kDD) == std::array<int, 2>{0, 0});
  CHECK(spam_infidelity(0.001) == doctest::Approx(0.002997).epsilon(1e-9));
  CHECK(spam_infidelity(0.0) == 0.0);
  const auto ph = default_phases(16);
  CHECK(ph.size() == 16);
  CHECK(ph[8] == doctest::Approx(kPi / 2));
}

TEST_CASE("SD target lives in the odd subspace") {
  const GateSetup s = prepare_gate(fast_gate(3), AtomicConstants{}.ion_mass_amu, PairType::kSD);
  const Vector4 t = target_bell_state(s, PairType::kSD);
  CHECK(std::abs(t(0)) < 1e-15);
  CHECK(std::abs(t(3)) < 1e-15);
  CHECK(std::abs(std::abs(t(1)) - 1 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(std::abs(t(2)) - 1 / std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("analytic parity of an ideal Bell state") {
  const auto phases = default_phases(16);
  const ParityScan s = parity_scan(proj(bell(0, 3, kPi / 2)), phases, PairType::kSS, 0, 1, 0.0);
  const ParityFit f = fit_parity(s);
  CHECK(f.contrast == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.residual_rms < 1e-12);
  for (double e : s.stderr_) CHECK(e == 0.0);
}

TEST_CASE("SD analysis phases must enter with opposite signs") {
  const Matrix4 rho = proj(bell(1, 2, kPi / 2));
  const auto phases = default_phases(16);
  const ParityFit opposite = fit_parity(parity_scan(rho, phases, PairType::kSD, 0, 1, 0.0));
  CHECK(opposite.contrast == doctest::Approx(1.0).epsilon(1e-12));
  // The same state analysed with equal phases shows no fringe.
  const ParityScan same = parity_scan(rho, phases, PairType::kSS, 0, 1, 0.0);
  for (double p : same.parities) CHECK(std::abs(p - same.parities[0]) < 1e-12);
  CHECK(fit_parity(same).contrast < 1e-12);
}

TEST_CASE("sampled scans") {
  const Matrix4 rho = partial_bell(0.95);
  const auto phases = default_phases(16);
  const ParityScan a = parity_scan(rho, phases, PairType::kSS, 500, 42, 0.001);
  const ParityScan b = parity_scan(rho, phases, PairType::kSS, 500, 42, 0.001);
  CHECK(a.parities == b.parities);
  CHECK(a.stderr_ == b.stderr_);
  const ParityScan c = parity_scan(rho, phases, PairType::kSS, 500, 43, 0.001);
  CHECK(a.parities != c.parities);
  for (std::size_t i = 0; i < a.phases.size(); ++i) {
    CHECK(std::abs(a.parities[i]) <= 1.0);
    CHECK(a.stderr_[i] == doctest::Approx(std::sqrt((1 - a.parities[i] * a.parities[i]) / 500)));
  }
  // Each point has its own stream: a shorter scan reproduces the prefix.
  const std::vector<double> head(phases.begin(), phases.begin() + 5);
  const ParityScan d = parity_scan(rho, head, PairType::kSS, 500, 42, 0.001);
  for (std::size_t i = 0; i < head.size(); ++i) CHECK(d.parities[i] == a.parities[i]);
  CHECK_THROWS_AS(parity_scan(rho, phases, PairType::kSS, -1, 1, 0.0), InvalidArgument);
}

TEST_CASE("parity fit") {
  const ParityFit f = fit_parity(synthetic(0.95, 0.3, 16));
  CHECK(std::abs(f.contrast - 0.95) < 1e-12);
  CHECK(std::abs(f.phase - 0.3) < 1e-12);
  CHECK(f.residual_rms < 1e-12);

  // Negative amplitude is absorbed into the phase.
  const ParityFit g = fit_parity(synthetic(-0.5, 0.0, 16));
  CHECK(g.contrast == doctest::Approx(0.5));
  CHECK(std::abs(std::remainder(g.phase - kPi, 2 * kPi)) < 1e-12);

  CHECK_THROWS_AS(fit_parity(synthetic(0.9, 0.0, 5)), InvalidArgument);
  ParityScan half = synthetic(0.9, 0.0, 16);
  for (double& p : half.phases) p *= 0.5;
  CHECK_THROWS_AS(fit_parity(half), InvalidArgument);
  ParityScan ragged = synthetic(0.9, 0.0, 16);
  ragged.stderr_.pop_back();
  CHECK_THROWS_AS(fit_parity(ragged), InvalidArgument);
}

TEST_CASE("fit uncertainties cover the truth") {
  const Matrix4 rho = partial_bell(0.95);
  const auto phases = default_phases(16);
  int covered = 0;
  const int trials = 1000;
  for (int seed = 1; seed <= trials; ++seed) {
    const ParityFit f = fit_parity(parity_scan(rho, phases, PairType::kSS, 500, seed, 0.0));
    if (std::abs(f.contrast - 0.95) <= 3 * f.contrast_err) ++covered;
  }
  CHECK(covered >= 990);
}

TEST_CASE("shot-noise variance matches the binomial prediction") {
  const Matrix4 rho = partial_bell(0.95);
  const auto phases = default_phases(16);
  const ParityScan exact = parity_scan(rho, phases, PairType::kSS, 0, 1, 0.0);
  const int trials = 1000;
  std::vector<double> sum(phases.size()), sum2(phases.size());
  for (int seed = 1; seed <= trials; ++seed) {
    const ParityScan s = parity_scan(rho, phases, PairType::kSS, 500, seed, 0.0);
    for (std::size_t i = 0; i < phases.size(); ++i) {
      sum[i] += s.parities[i];
      sum2[i] += s.parities[i] * s.parities[i];
    }
  }
  double ratio = 0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double mean = sum[i] / trials;
    const double var = (sum2[i] - trials * mean * mean) / (trials - 1);
    const double pred = (1 - exact.parities[i] * exact.parities[i]) / 500;
    ratio += var / pred / static_cast<double>(phases.size());
    CHECK(std::abs(mean - exact.parities[i]) < 5 * std::sqrt(pred / trials));
  }
  CHECK(std::abs(ratio - 1) < 0.1);
}

TEST_CASE("parity after the analysis pulses is a second-degree trigonometric polynomial") {
  std::vector<Matrix4> states;
  NoiseModel noisy = paper_preset().noise;
  states.push_back(run_gate(PairType::kSD, noisy, fast_gate(3)).rho);
  states.push_back(run_gate(PairType::kSS, noisy, fast_gate(3)).rho);
  std::mt19937 rng(9);
  std::normal_distribution<double> g;
  Eigen::Matrix4cd m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = cplx(g(rng), g(rng));
  states.push_back(m * m.adjoint() / (m * m.adjoint()).trace());

  for (const auto& rho : states) {
    for (PairType p : {PairType::kSS, PairType::kSD}) {
      const ParityScan s = parity_scan(rho, default_phases(16), p, 0, 1, 0.0);
      const auto [x, resid] = harmonic_fit(s);
      CHECK(resid < 1e-10);
      CHECK(std::abs(x(1)) < 1e-10);
      CHECK(std::abs(x(2)) < 1e-10);
      CHECK(std::abs(x(5)) < 1e-10);
      CHECK(std::abs(x(6)) < 1e-10);
      // A constant offset is orthogonal to the fringe on a full-period grid.
      const ParityFit f = fit_parity(s);
      CHECK(f.contrast == doctest::Approx(std::hypot(x(3), x(4))).epsilon(1e-9));
    }
  }
}

TEST_CASE("D-D post-selection") {
  const OutcomeCounts c{200, 50, 50, 200};
  CHECK(dd_postselect(c, 0.0, 1) == c);
  CHECK_THROWS_AS(dd_postselect(c, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(dd_postselect({0, 0, 0, 0}, 0.0, 1), EmptyResult);
  CHECK_THROWS_AS(dd_postselect({1, 0, 0, 0}, 0.999999, 3), EmptyResult);

  const int trials = 2000;
  double sum = 0, sum2 = 0;
  for (int seed = 0; seed < trials; ++seed) {
    const OutcomeCounts k = dd_postselect(c, 0.1, seed);
    const double n = static_cast<double>(k[0] + k[1] + k[2] + k[3]);
    sum += n;
    sum2 += n * n;
  }
  const double mean = sum / trials;
  const double var = sum2 / trials - mean * mean;
  CHECK(std::abs(mean - 450) < 5 * std::sqrt(45.0 / trials));
  CHECK(std::abs(var / 45.0 - 1) < 0.15);

  // Outcome-blind filtering leaves the parity unbiased.
  const Matrix4 rho = proj(bell(0, 3, kPi / 2));
  const std::vector<double> phi{0.0};
  double avg = 0;
  for (int seed = 0; seed < 400; ++seed)
    avg += parity_scan(rho, phi, PairType::kDD, 500, seed, 0.0, 0.1).parities[0] / 400;
  const double exact = parity_scan(rho, phi, PairType::kDD, 0, 0, 0.0).parities[0];
  CHECK(std::abs(avg - exact) < 0.01);
}

TEST_CASE("measure_bell") {
  const Matrix4 rho = proj(bell(1, 2, 0.7));
  ProtocolSettings s;
  s.shots = 0;
  const BellResult r = measure_bell(rho, PairType::kSD, s, 0.0);
  CHECK(r.p_pop.value == doctest::Approx(1.0));
  CHECK(r.contrast.value == doctest::Approx(1.0));
  CHECK(r.fidelity.value == doctest::Approx(1.0));

  const BellResult e = measure_bell(rho, PairType::kSD, s, 0.001);
  CHECK(e.fidelity.value == doctest::Approx(1 - spam_infidelity(0.001)).epsilon(1e-12));

  s.shots = 500;
  s.seed = 7;
  const BellResult a = measure_bell(rho, PairType::kSD, s, 0.001);
  const BellResult b = measure_bell(rho, PairType::kSD, s, 0.001);
  CHECK(a.fidelity.value == b.fidelity.value);
  CHECK(a.contrast.value <= 1.0);
  CHECK(a.fidelity.err > 0);
}

TEST_CASE("noise-free gates reach the Bell state") {
  for (PairType p : {PairType::kSS, PairType::kDD, PairType::kSD}) {
    const GateResult r = run_gate(p, NoiseModel::none(), fast_gate(5));
    CHECK(r.fidelity >= 0.999);
    CHECK(std::isnan(r.truncation_shift));
    CHECK(std::abs(r.rho.trace() - 1.0) < 1e-9);
  }
  GateConfig guarded = fast_gate(5);
  guarded.truncation_guard = true;
  CHECK_THROWS_AS(run_gate(PairType::kSS, NoiseModel::none(), guarded), TruncationError);
}

TEST_CASE("error budget with every channel off") {
  ExperimentConfig cfg = paper_preset();
  cfg.noise = NoiseModel::none();
  const ErrorBudget b = error_budget(cfg);
  REQUIRE(b.rows.size() == 5);
  for (const auto& r : b.rows) CHECK(std::abs(r.infidelity) < 1e-3);
  CHECK(b.total_infidelity == 0.0);
}

TEST_CASE("off-resonant estimate") {
  ExperimentConfig cfg = paper_preset();
  const double e = offres_infidelity(cfg);
  CHECK(e > 1e-4);
  CHECK(e < 1e-2);
  cfg.protocol.pair = PairType::kSS;
  CHECK(offres_infidelity(cfg) == 0.0);
}

TEST_CASE("laser-dephasing error scales with 1/tau_s") {
  const NoiseModel n = paper_preset().noise.only(Channel::kLaserDephasing);
  NoiseModel slow = n;
  slow.tau_s = 2 * n.tau_s;
  const double e1 = 1 - run_gate(PairType::kSD, n, fast_gate(5)).fidelity;
  const double e2 = 1 - run_gate(PairType::kSD, slow, fast_gate(5)).fidelity;
  CHECK(std::abs(e2 / e1 - 0.5) < 0.15 * 0.5);
}

TEST_CASE("single-channel errors at the operating point") {
  // Regression pins for the chosen Lindblad conventions.
  const NoiseModel n = paper_preset().noise;
  const GateConfig g = fast_gate(7);
  const double laser = 1 - run_gate(PairType::kSD, n.only(Channel::kLaserDephasing), g).fidelity;
  const double motion =
      1 - run_gate(PairType::kSD, n.only(Channel::kMotionalDephasing), g).fidelity;
  CHECK(laser == doctest::Approx(0.0251).epsilon(0.01));
  CHECK(motion == doctest::Approx(0.0148).epsilon(0.01));
}

TEST_CASE("heating rate solve") {
  ExperimentConfig cfg = paper_preset();
  cfg.gate.n_max = 5;
  cfg.gate.truncation_guard = false;
  const double rate = solve_heating_rate(cfg);
  CHECK(rate == doctest::Approx(kPaperHeatingRate).epsilon(0.02));
  CHECK_THROWS_AS(solve_heating_rate(cfg, 0.0), InvalidArgument);
}
