#include "dualgate/zeeman.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "dualgate/errors.hpp"
#include "dualgate/kv_file.hpp"

namespace dualgate {

namespace {

bool is_half_integer(double x) {
  const double twice = 2.0 * x;
  return std::abs(twice - std::round(twice)) < 1e-12;
}

bool same_half_integer(double a, double b) { return std::lround(2 * a) == std::lround(2 * b); }

struct Block {
  std::vector<double> m_i;
  std::vector<double> m_j;
  Eigen::MatrixXd i_dot_j;
  Eigen::MatrixXd quad;
  Eigen::VectorXd zeeman_per_gauss;  // diagonal, Hz/G
};

// Basis |m_I, m_J> with m_I + m_J = m_F.
Block make_block(const HyperfineManifold& mf, double m_f) {
  Block b;
  for (double mi = mf.i; mi >= -mf.i - 1e-9; mi -= 1.0) {
    const double mj = m_f - mi;
    if (std::abs(mj) <= mf.j + 1e-9) {
      b.m_i.push_back(mi);
      b.m_j.push_back(mj);
    }
  }
  const auto n = static_cast<Eigen::Index>(b.m_i.size());
  if (n == 0) throw InvalidArgument("m_F outside manifold");

  const double ii = mf.i * (mf.i + 1);
  const double jj = mf.j * (mf.j + 1);
  b.i_dot_j = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    b.i_dot_j(r, r) = b.m_i[r] * b.m_j[r];
    for (Eigen::Index c = 0; c < n; ++c) {
      // <mi+1, mj-1| I+ J- |mi, mj> / 2
      if (same_half_integer(b.m_i[r], b.m_i[c] + 1) && same_half_integer(b.m_j[r], b.m_j[c] - 1)) {
        const double ip = std::sqrt(ii - b.m_i[c] * (b.m_i[c] + 1));
        const double jm = std::sqrt(jj - b.m_j[c] * (b.m_j[c] - 1));
        b.i_dot_j(r, c) = 0.5 * ip * jm;
        b.i_dot_j(c, r) = 0.5 * ip * jm;
      }
    }
  }
  b.quad = Eigen::MatrixXd::Zero(n, n);
  if (mf.b_quad_hz != 0.0) {
    const double denom = 2 * mf.i * (2 * mf.i - 1) * mf.j * (2 * mf.j - 1);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    b.quad = (3.0 * b.i_dot_j * b.i_dot_j + 1.5 * b.i_dot_j - ii * jj * id) / denom;
  }
  b.zeeman_per_gauss.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    b.zeeman_per_gauss(r) = kBohrHzPerGauss * (mf.g_j * b.m_j[r] + mf.g_i * b.m_i[r]);
  }
  return b;
}

Eigen::MatrixXd block_hamiltonian(const HyperfineManifold& mf, const Block& b, double b_gauss) {
  Eigen::MatrixXd h = mf.a_hf_hz * b.i_dot_j + mf.b_quad_hz * b.quad;
  h.diagonal() += b_gauss * b.zeeman_per_gauss;
  return h;
}

std::vector<Level> track_nonnegative(const HyperfineManifold& mf, double m_f, double b_gauss,
                                     const TrackingOptions& opts) {
  const Block blk = make_block(mf, m_f);
  const auto n = static_cast<Eigen::Index>(blk.m_i.size());

  // Zero-field states are eigenstates of I.J, hence of F^2.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> zero(blk.i_dot_j);
  Eigen::MatrixXd tracked = zero.eigenvectors();
  std::vector<Level> levels(n);
  const double ii = mf.i * (mf.i + 1);
  const double jj = mf.j * (mf.j + 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double ff = 2 * zero.eigenvalues()(k) + ii + jj;
    const double f = std::round(2 * (-0.5 + std::sqrt(0.25 + ff))) / 2;
    levels[k].label = LevelLabel{f, m_f};
  }
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    if (levels[k].label == levels[k + 1].label) {
      throw LabelAmbiguity("zero-field F labels are not distinct in block m_F=" +
                           std::to_string(m_f));
    }
  }

  const Eigen::MatrixXd h0 = block_hamiltonian(mf, blk, 0.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    levels[k].energy_hz = tracked.col(k).dot(h0 * tracked.col(k));
  }

  const int steps =
      b_gauss > 0 ? std::max(1, static_cast<int>(std::ceil(b_gauss / opts.grid_step_gauss))) : 0;
  for (int s = 1; s <= steps; ++s) {
    const double b = b_gauss * s / steps;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block_hamiltonian(mf, blk, b));
    const Eigen::MatrixXd overlap = (es.eigenvectors().transpose() * tracked).cwiseAbs();
    std::vector<Eigen::Index> pick(n);
    std::set<Eigen::Index> used;
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::Index best = 0;
      const double o = overlap.col(j).maxCoeff(&best);
      pick[j] = best;
      if (o < opts.min_overlap || !used.insert(best).second) levels[j].ambiguous = true;
    }
    Eigen::MatrixXd next(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd v = es.eigenvectors().col(pick[j]);
      if (v.dot(tracked.col(j)) < 0) v = -v;
      next.col(j) = v;
      levels[j].energy_hz = es.eigenvalues()(pick[j]);
    }
    tracked = std::move(next);
  }

  std::sort(levels.begin(), levels.end(),
            [](const Level& a, const Level& b) { return a.energy_hz < b.energy_hz; });
  return levels;
}

}  // namespace

// ---------------------------------------------------------------------------------------

AtomicConstants load_atomic_constants(const std::string& path) {
  AtomicConstants c;
  struct Field {
    const char* key;
    double* target;
    bool seen;
  };
  std::vector<Field> fields = {
      {"s12.A_hf_mhz", &c.s12_a_hf_mhz, false}, {"d52.A_hf_mhz", &c.d52_a_hf_mhz, false},
      {"d52.B_quad_mhz", &c.d52_b_quad_mhz, false}, {"s12.gJ", &c.s12_g_j, false},
      {"d52.gJ", &c.d52_g_j, false}, {"gI", &c.g_i, false},
      {"ion.mass_amu", &c.ion_mass_amu, false}};
  for (const auto& e : read_kv_file(path)) {
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const Field& f) { return e.key == f.key; });
    if (it == fields.end()) throw ConfigError("unknown atomic-constants key '" + e.key + "'", e.line);
    *it->target = kv_to_double(e);
    if (!std::isfinite(*it->target)) throw ConfigError("non-finite value for " + e.key, e.line);
    it->seen = true;
  }
  for (const auto& f : fields) {
    if (!f.seen) throw ConfigError(std::string("missing atomic-constants key '") + f.key + "' in " + path);
  }
  if (c.ion_mass_amu <= 0) throw ConfigError("ion.mass_amu must be positive");
  return c;
}

int HyperfineManifold::dimension() const {
  return static_cast<int>(std::lround((2 * j + 1) * (2 * i + 1)));
}

void HyperfineManifold::validate() const {
  if (!is_half_integer(j) || !is_half_integer(i) || j <= 0 || i <= 0) {
    throw InvalidArgument(name + ": J and I must be positive half-integers");
  }
  if (!std::isfinite(a_hf_hz) || !std::isfinite(b_quad_hz) || !std::isfinite(g_j) ||
      !std::isfinite(g_i)) {
    throw InvalidArgument(name + ": non-finite constant");
  }
  if (b_quad_hz != 0.0 && (j < 1.0 || i < 1.0)) {
    throw InvalidArgument(name + ": quadrupole constant must vanish for J=1/2 or I=1/2");
  }
}

HyperfineManifold s12_manifold(const AtomicConstants& c) {
  return HyperfineManifold{"S1/2", 0.5, 1.5, c.s12_a_hf_mhz * 1e6, 0.0, c.s12_g_j, c.g_i};
}

HyperfineManifold d52_manifold(const AtomicConstants& c) {
  return HyperfineManifold{"D5/2", 2.5, 1.5, c.d52_a_hf_mhz * 1e6, c.d52_b_quad_mhz * 1e6,
                           c.d52_g_j, c.g_i};
}

bool LevelLabel::operator==(const LevelLabel& o) const {
  return same_half_integer(f, o.f) && same_half_integer(m_f, o.m_f);
}

std::string LevelLabel::to_string() const {
  std::ostringstream os;
  os << "F=" << f << ",mF=" << m_f;
  return os.str();
}

bool LevelDiagram::ambiguous() const {
  return std::any_of(levels.begin(), levels.end(), [](const Level& l) { return l.ambiguous; });
}

const Level& LevelDiagram::find(const LevelLabel& label) const {
  for (const auto& l : levels) {
    if (l.label == label) return l;
  }
  throw InvalidArgument("no level " + label.to_string());
}

std::vector<Level> block_levels(const HyperfineManifold& manifold, double m_f, double b_gauss,
                                const TrackingOptions& opts) {
  manifold.validate();
  if (!std::isfinite(b_gauss)) throw InvalidArgument("magnetic field must be finite");
  if (b_gauss >= 0) return track_nonnegative(manifold, m_f, b_gauss, opts);
  auto mirrored = track_nonnegative(manifold, -m_f, -b_gauss, opts);
  for (auto& l : mirrored) l.label.m_f = m_f;
  return mirrored;
}

LevelDiagram diagonalize_manifold(const HyperfineManifold& manifold, double b_gauss,
                                  const TrackingOptions& opts) {
  manifold.validate();
  if (!(b_gauss >= 0)) throw InvalidArgument("magnetic field must be >= 0");
  LevelDiagram d;
  d.b_gauss = b_gauss;
  const double f_max = manifold.i + manifold.j;
  for (double m = -f_max; m <= f_max + 1e-9; m += 1.0) {
    auto block = track_nonnegative(manifold, m, b_gauss, opts);
    d.levels.insert(d.levels.end(), block.begin(), block.end());
  }
  return d;
}

QubitSpec s_qubit(const AtomicConstants& c) {
  return QubitSpec{QubitType::kS, s12_manifold(c), LevelLabel{1, 0}, LevelLabel{2, 0}};
}

QubitSpec d_qubit(const AtomicConstants& c) {
  return QubitSpec{QubitType::kD, d52_manifold(c), LevelLabel{2, 1}, LevelLabel{3, 1}};
}

namespace {

const Level& pick(const std::vector<Level>& levels, const LevelLabel& label) {
  for (const auto& l : levels) {
    if (l.label == label) return l;
  }
  throw InvalidArgument("no level " + label.to_string());
}

double level_energy(const HyperfineManifold& m, const LevelLabel& label, double b_gauss,
                    const TrackingOptions& opts) {
  const auto levels = block_levels(m, label.m_f, b_gauss, opts);
  const Level& l = pick(levels, label);
  if (l.ambiguous) {
    throw LabelAmbiguity("label " + label.to_string() + " is ambiguous at B=" +
                         std::to_string(b_gauss) + " G");
  }
  return l.energy_hz;
}

}  // namespace

double qubit_frequency(const QubitSpec& qubit, double b_gauss, const TrackingOptions& opts) {
  if (same_half_integer(qubit.lower.m_f, qubit.upper.m_f)) {
    const auto levels = block_levels(qubit.manifold, qubit.lower.m_f, b_gauss, opts);
    const Level& lo = pick(levels, qubit.lower);
    const Level& hi = pick(levels, qubit.upper);
    if (lo.ambiguous || hi.ambiguous) {
      throw LabelAmbiguity("qubit labels ambiguous at B=" + std::to_string(b_gauss) + " G");
    }
    return std::abs(hi.energy_hz - lo.energy_hz);
  }
  return std::abs(level_energy(qubit.manifold, qubit.upper, b_gauss, opts) -
                  level_energy(qubit.manifold, qubit.lower, b_gauss, opts));
}

double sensitivity(const QubitSpec& qubit, double b_gauss) {
  const double h = kSensitivityStepGauss;
  return (qubit_frequency(qubit, b_gauss + h) - qubit_frequency(qubit, b_gauss - h)) / (2 * h);
}

double find_sweet_spot(const QubitSpec& qubit, double lo_gauss, double hi_gauss,
                       double tol_gauss) {
  if (!(lo_gauss < hi_gauss)) throw InvalidArgument("sweet-spot range must satisfy lo < hi");
  double lo = lo_gauss;
  double hi = hi_gauss;
  double s_lo = sensitivity(qubit, lo);
  const double s_hi = sensitivity(qubit, hi);
  if (s_lo == 0.0) return lo;
  if (s_hi == 0.0) return hi;
  if ((s_lo > 0) == (s_hi > 0)) {
    throw NotFound("qubit slope does not change sign in [" + std::to_string(lo_gauss) + ", " +
                   std::to_string(hi_gauss) + "] G");
  }
  while (hi - lo > tol_gauss) {
    const double mid = 0.5 * (lo + hi);
    const double s_mid = sensitivity(qubit, mid);
    if (s_mid == 0.0) return mid;
    if ((s_mid > 0) == (s_lo > 0)) {
      lo = mid;
      s_lo = s_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------------------

std::vector<SpectatorTransition> default_spectators() {
  return {
      {"D52(F=2,mF=1)->D52(F=1,mF=0)", LevelLabel{2, 1}, LevelLabel{1, 0}, 1.0},
      {"D52(F=3,mF=1)->D52(F=4,mF=-1)", LevelLabel{3, 1}, LevelLabel{4, -1}, 1.0},
  };
}

SpectatorReport spectator_detunings(const AtomicConstants& c, double b_gauss,
                                    const std::vector<double>& mode_freqs_hz,
                                    double sideband_coupling,
                                    const std::vector<SpectatorTransition>& spectators) {
  if (!(b_gauss >= 0)) throw InvalidArgument("magnetic field must be >= 0");
  const QubitSpec dq = d_qubit(c);
  const LevelDiagram diagram = diagonalize_manifold(dq.manifold, b_gauss);

  SpectatorReport report;
  report.b_gauss = b_gauss;
  report.qubit_hz = std::abs(diagram.find(dq.upper).energy_hz - diagram.find(dq.lower).energy_hz);

  struct Line {
    std::string name;
    double hz;
    double coupling;
  };
  std::vector<Line> lines = {{"carrier", report.qubit_hz, 1.0}};
  for (std::size_t k = 0; k < mode_freqs_hz.size(); ++k) {
    const std::string tag = "mode" + std::to_string(k);
    lines.push_back({"carrier+" + tag, report.qubit_hz + mode_freqs_hz[k], sideband_coupling});
    lines.push_back({"carrier-" + tag, report.qubit_hz - mode_freqs_hz[k], sideband_coupling});
  }

  report.min_detuning_hz = std::numeric_limits<double>::infinity();
  for (const auto& s : spectators) {
    const Level& from = diagram.find(s.from);
    const Level& to = diagram.find(s.to);
    if (from.ambiguous || to.ambiguous) {
      throw LabelAmbiguity("spectator " + s.name + " has ambiguous labels");
    }
    const double f = std::abs(to.energy_hz - from.energy_hz);
    for (const auto& l : lines) {
      SpectatorLine sl{s.name, l.name, f, l.hz, std::abs(f - l.hz), s.coupling * l.coupling};
      report.min_detuning_hz = std::min(report.min_detuning_hz, sl.detuning_hz);
      report.lines.push_back(std::move(sl));
    }
  }
  return report;
}

double offres_error(const std::vector<SpectatorLine>& lines, double rabi_hz) {
  if (!(rabi_hz >= 0)) throw InvalidArgument("Rabi frequency must be >= 0");
  double total = 0.0;
  for (const auto& l : lines) {
    if (l.detuning_hz == 0.0) {
      throw InvalidArgument("spectator " + l.transition + " is resonant with " + l.line);
    }
    if (std::isinf(l.detuning_hz)) continue;
    const double w = l.coupling * rabi_hz;
    total += w * w / (2.0 * (w * w + l.detuning_hz * l.detuning_hz));
  }
  return total;
}

}  // namespace dualgate
