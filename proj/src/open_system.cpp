#include "dualgate/open_system.hpp"

#include <cmath>
#include <sstream>

#include "dualgate/errors.hpp"

namespace dualgate {

std::string to_string(Channel c) {
  switch (c) {
    case Channel::kLaserDephasing: return "laser_dephasing";
    case Channel::kMotionalDephasing: return "motional_dephasing";
    case Channel::kHeating: return "heating";
  }
  return "?";
}

void NoiseModel::validate() const {
  if (laser_dephasing && !(tau_s > 0)) throw InvalidArgument("tau_s must be > 0");
  if (motional_dephasing && !(tau_m > 0)) throw InvalidArgument("tau_m must be > 0");
  if (heating && !(heating_rate >= 0)) throw InvalidArgument("heating rate must be >= 0");
  if (!(spam >= 0 && spam < 1)) throw InvalidArgument("spam probability must be in [0, 1)");
}

NoiseModel NoiseModel::only(Channel c) const {
  NoiseModel out = without_channels();
  out.laser_dephasing = c == Channel::kLaserDephasing;
  out.motional_dephasing = c == Channel::kMotionalDephasing;
  out.heating = c == Channel::kHeating;
  return out;
}

NoiseModel NoiseModel::without_channels() const {
  NoiseModel out = *this;
  out.laser_dephasing = out.motional_dephasing = out.heating = false;
  return out;
}

CollapseSet collapse_ops(const NoiseModel& noise, const CompositeSpace& space, PairType pair) {
  noise.validate();
  CollapseSet out;
  if (noise.laser_dephasing) {
    const double rate = 1.0 / (2.0 * noise.tau_s);
    const Operator z1 = embed(sigma_z(), Slot::kIon1, space);
    const Operator z2 = embed(sigma_z(), Slot::kIon2, space);
    if (noise.laser_correlation == LaserCorrelation::kIndependent) {
      out.push_back({z1, rate, Channel::kLaserDephasing, "sigma_z ion1"});
      out.push_back({z2, rate, Channel::kLaserDephasing, "sigma_z ion2"});
    } else {
      const auto types = ion_types(pair);
      const Operator sum = z1 * cplx(phase_sense(types[0])) + z2 * cplx(phase_sense(types[1]));
      out.push_back({sum, rate, Channel::kLaserDephasing, "collective sigma_z"});
    }
  }
  const Matrix a = ladder(space.n_max());
  const Matrix n = a.adjoint() * a;
  const std::array<Slot, 2> modes = {Slot::kModeCom, Slot::kModeRocking};
  const std::array<const char*, 2> names = {"com", "rocking"};
  for (int k = 0; k < 2; ++k) {
    if (noise.motional_dephasing) {
      out.push_back({embed(n, modes[k], space), 2.0 / noise.tau_m, Channel::kMotionalDephasing,
                     std::string("n ") + names[k]});
    }
    if (noise.heating && noise.heating_rate > 0) {
      out.push_back({embed(a.adjoint(), modes[k], space), noise.heating_rate, Channel::kHeating,
                     std::string("a^dag ") + names[k]});
      out.push_back({embed(a, modes[k], space), noise.heating_rate, Channel::kHeating,
                     std::string("a ") + names[k]});
    }
  }
  return out;
}

Matrix lindblad_rhs(const Matrix& rho, const Operator& h, const CollapseSet& collapses) {
  const Matrix& hm = h.matrix();
  if (rho.rows() != rho.cols() || rho.rows() != hm.rows()) {
    throw InvalidArgument("density matrix and Hamiltonian shapes differ");
  }
  const cplx mi(0, -1);
  Matrix out = mi * (hm * rho - rho * hm);
  for (const auto& c : collapses) {
    const Matrix& cm = c.op.matrix();
    if (cm.rows() != rho.rows()) throw InvalidArgument("collapse operator shape mismatch");
    const Matrix cdc = cm.adjoint() * cm;
    out += c.rate * (cm * rho * cm.adjoint() - 0.5 * (cdc * rho + rho * cdc));
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Integrator
// ---------------------------------------------------------------------------------------

namespace {

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i != j && m(i, j) != cplx(0.0)) return false;
    }
  }
  return true;
}

// Right-hand side split for speed: diagonal jump operators and diagonal c^dag c terms are
// folded into one elementwise weight; the rest are applied as sparse sandwiches.
class MasterGenerator {
 public:
  MasterGenerator(const MsHamiltonian& h, const CollapseSet& collapses) : h_(h) {
    const int n = h.space().total_dim();
    weight_ = Matrix::Zero(n, n);
    Matrix damping = Matrix::Zero(n, n);
    bool dense_damping = false;
    for (const auto& c : collapses) {
      const Matrix& cm = c.op.matrix();
      if (is_diagonal(cm)) {
        const Vector d = cm.diagonal();
        for (int k = 0; k < n; ++k) {
          for (int j = 0; j < n; ++j) {
            weight_(j, k) += c.rate * (d(j) * std::conj(d(k)) -
                                       0.5 * (std::norm(d(j)) + std::norm(d(k))));
          }
        }
        continue;
      }
      sandwich_.push_back({c.rate, cm.sparseView(cplx(0.0), 1e-300)});
      const Matrix cdc = cm.adjoint() * cm;
      if (is_diagonal(cdc)) {
        for (int k = 0; k < n; ++k) {
          for (int j = 0; j < n; ++j) {
            weight_(j, k) -= 0.5 * c.rate * (cdc(j, j) + cdc(k, k));
          }
        }
      } else {
        damping -= 0.5 * c.rate * cdc;
        dense_damping = true;
      }
    }
    if (dense_damping) damping_ = damping.sparseView(cplx(0.0), 1e-300);
  }

  void operator()(double t, const Matrix& rho, Matrix& out) {
    h_.apply(t, rho, k_);
    k_ *= cplx(0, -1);
    if (damping_.nonZeros() > 0) k_.noalias() += damping_ * rho;
    out = k_ + k_.adjoint();
    out += weight_.cwiseProduct(rho);
    for (const auto& [rate, c] : sandwich_) {
      x_.noalias() = c * rho;
      y_ = x_.adjoint();
      out.noalias() += rate * (c * y_);
    }
  }

 private:
  const MsHamiltonian& h_;
  Matrix weight_;
  SparseMatrix damping_;
  std::vector<std::pair<double, SparseMatrix>> sandwich_;
  Matrix k_, x_, y_;
};

}  // namespace

CompositeState integrate_master(const CompositeState& rho0, const DriveSpec& drive,
                                const ModePair& modes, PairType pair, const NoiseModel& noise,
                                double duration, double dt, CouplingModel model) {
  if (!(duration >= 0)) throw InvalidArgument("duration must be >= 0");
  if (!(dt > 0)) throw InvalidArgument("time step must be > 0");
  const CompositeSpace& space = rho0.space();
  const MsHamiltonian h(drive, modes, pair, space, model);
  const double bound = max_time_step(h);
  if (dt > bound * (1 + 1e-12)) {
    std::ostringstream os;
    os << "time step " << dt << " s exceeds the resolution bound " << bound << " s";
    throw InvalidArgument(os.str());
  }
  MasterGenerator f(h, collapse_ops(noise, space, pair));

  Matrix rho = rho0.density_matrix();
  const cplx trace0 = rho.trace();
  const long steps = duration > 0 ? static_cast<long>(std::ceil(duration / dt - 1e-9)) : 0;
  const double h_step = steps > 0 ? duration / static_cast<double>(steps) : 0.0;
  Matrix k1, k2, k3, k4, tmp;
  for (long s = 0; s < steps; ++s) {
    const double t = h_step * static_cast<double>(s);
    f(t, rho, k1);
    tmp = rho + 0.5 * h_step * k1;
    f(t + 0.5 * h_step, tmp, k2);
    tmp = rho + 0.5 * h_step * k2;
    f(t + 0.5 * h_step, tmp, k3);
    tmp = rho + h_step * k3;
    f(t + h_step, tmp, k4);
    rho += (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  const double drift = std::abs(rho.trace() - trace0);
  if (!(drift <= kTraceDriftLimit)) {
    std::ostringstream os;
    os << "trace drift " << drift << " exceeds " << kTraceDriftLimit << " after " << steps
       << " steps; reduce dt";
    throw StepSizeError(os.str());
  }
  const double herm = hermiticity_defect(rho);
  if (!(herm <= kTraceDriftLimit)) {
    std::ostringstream os;
    os << "Hermiticity defect " << herm << " after integration; reduce dt";
    throw StepSizeError(os.str());
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();
  if (noise.any_channel()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (!(min_eig >= -kNegativityLimit)) {
      std::ostringstream os;
      os << "smallest eigenvalue " << min_eig << " below " << -kNegativityLimit
         << "; reduce dt";
      throw StepSizeError(os.str());
    }
  }
  return CompositeState::density(space, std::move(rho));
}

std::array<double, 4> apply_spam(const std::array<double, 4>& p, double eps) {
  if (!(eps >= 0 && eps < 1)) throw InvalidArgument("spam probability must be in [0, 1)");
  double sum = 0;
  for (double v : p) sum += v;
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("probabilities must sum to 1");
  // Index bits: (b1 << 1) | b2.
  std::array<double, 4> out{};
  for (int from = 0; from < 4; ++from) {
    for (int to = 0; to < 4; ++to) {
      const int flips = ((from ^ to) & 1) + (((from ^ to) >> 1) & 1);
      const double w = std::pow(eps, flips) * std::pow(1.0 - eps, 2 - flips);
      out[to] += w * p[from];
    }
  }
  return out;
}

}  // namespace dualgate
