#include "dualgate/quantum_core.hpp"

#include <cmath>
#include <string>

#include "dualgate/errors.hpp"

namespace dualgate {

namespace {

constexpr double kStateTol = 1e-9;
constexpr double kHermitianTol = 1e-10;

}  // namespace

CompositeSpace::CompositeSpace(int n_max) : n_max_(n_max) {
  if (n_max < 1) {
    throw InvalidArgument("n_max must be >= 1, got " + std::to_string(n_max));
  }
}

int CompositeSpace::index(int q1, int q2, int n_c, int n_r) const {
  const int f = fock_dim();
  if (q1 < 0 || q1 > 1 || q2 < 0 || q2 > 1 || n_c < 0 || n_c >= f || n_r < 0 || n_r >= f) {
    throw InvalidArgument("basis label out of range");
  }
  return ((q1 * 2 + q2) * f + n_c) * f + n_r;
}

CompositeSpace build_space(int n_max) { return CompositeSpace(n_max); }

// ---------------------------------------------------------------------------------------
// Operator
// ---------------------------------------------------------------------------------------

Operator::Operator(CompositeSpace space, Matrix matrix)
    : space_(space), matrix_(std::move(matrix)) {
  const int n = space_.total_dim();
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw InvalidArgument("operator side " + std::to_string(matrix_.rows()) + "x" +
                          std::to_string(matrix_.cols()) + " does not match space dimension " +
                          std::to_string(n));
  }
}

Operator Operator::zero(const CompositeSpace& space) {
  return Operator(space, Matrix::Zero(space.total_dim(), space.total_dim()));
}

Operator Operator::identity(const CompositeSpace& space) {
  Operator op(space, Matrix::Identity(space.total_dim(), space.total_dim()));
  op.hermitian_ = true;
  return op;
}

Operator Operator::hermitian(CompositeSpace space, Matrix matrix) {
  Operator op(space, std::move(matrix));
  const double defect = hermiticity_defect(op.matrix_);
  if (defect > kHermitianTol) {
    throw InvalidArgument("operator flagged Hermitian has defect " + std::to_string(defect));
  }
  op.hermitian_ = true;
  return op;
}

Operator Operator::adjoint() const {
  Operator op(space_, matrix_.adjoint());
  op.hermitian_ = hermitian_;
  return op;
}

Operator Operator::operator*(const Operator& rhs) const {
  if (!(space_ == rhs.space_)) throw InvalidArgument("operator spaces differ");
  return Operator(space_, matrix_ * rhs.matrix_);
}

Operator Operator::operator+(const Operator& rhs) const {
  if (!(space_ == rhs.space_)) throw InvalidArgument("operator spaces differ");
  return Operator(space_, matrix_ + rhs.matrix_);
}

Operator Operator::operator-(const Operator& rhs) const {
  if (!(space_ == rhs.space_)) throw InvalidArgument("operator spaces differ");
  return Operator(space_, matrix_ - rhs.matrix_);
}

Operator Operator::operator*(cplx s) const { return Operator(space_, matrix_ * s); }

// ---------------------------------------------------------------------------------------
// CompositeState
// ---------------------------------------------------------------------------------------

CompositeState CompositeState::pure(CompositeSpace space, Vector psi) {
  if (psi.size() != space.total_dim()) {
    throw InvalidArgument("state vector length does not match space dimension");
  }
  const double norm = psi.norm();
  if (std::abs(norm - 1.0) > kStateTol) {
    throw InvalidArgument("pure state is not normalized (norm " + std::to_string(norm) + ")");
  }
  return CompositeState(space, std::move(psi));
}

CompositeState CompositeState::density(CompositeSpace space, Matrix rho) {
  const int n = space.total_dim();
  if (rho.rows() != n || rho.cols() != n) {
    throw InvalidArgument("density matrix side does not match space dimension");
  }
  if (hermiticity_defect(rho) > kStateTol) {
    throw InvalidArgument("density matrix is not Hermitian");
  }
  const cplx tr = rho.trace();
  if (std::abs(tr - 1.0) > kStateTol) {
    throw InvalidArgument("density matrix trace " + std::to_string(tr.real()) + " != 1");
  }
  return CompositeState(space, std::move(rho));
}

CompositeState CompositeState::basis(const CompositeSpace& space, int q1, int q2, int n_c,
                                     int n_r) {
  if (q1 < 0 || q1 > 1 || q2 < 0 || q2 > 1 || n_c < 0 || n_r < 0 || n_c > space.n_max() ||
      n_r > space.n_max()) {
    throw InvalidArgument("basis label out of range");
  }
  Vector psi = Vector::Zero(space.total_dim());
  psi(space.index(q1, q2, n_c, n_r)) = 1.0;
  return CompositeState(space, std::move(psi));
}

const Vector& CompositeState::vector() const {
  if (!is_pure()) throw InvalidArgument("state is a density matrix, not a vector");
  return std::get<Vector>(data_);
}

const Matrix& CompositeState::matrix() const {
  if (is_pure()) throw InvalidArgument("state is a pure vector, not a density matrix");
  return std::get<Matrix>(data_);
}

Matrix CompositeState::density_matrix() const {
  if (is_pure()) {
    const Vector& psi = std::get<Vector>(data_);
    return psi * psi.adjoint();
  }
  return std::get<Matrix>(data_);
}

void CompositeState::validate_positive(double tol) const {
  if (is_pure()) return;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(std::get<Matrix>(data_),
                                               Eigen::EigenvaluesOnly);
  const double smallest = solver.eigenvalues().minCoeff();
  if (smallest < -tol) {
    throw InvalidArgument("density matrix has eigenvalue " + std::to_string(smallest));
  }
}

// ---------------------------------------------------------------------------------------
// Blocks and embedding
// ---------------------------------------------------------------------------------------

Matrix2 sigma_x() {
  Matrix2 m;
  m << 0, 1, 1, 0;
  return m;
}

Matrix2 sigma_y() {
  Matrix2 m;
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

Matrix2 sigma_z() {
  Matrix2 m;
  m << 1, 0, 0, -1;
  return m;
}

Matrix2 pauli_phi(double phi) { return std::cos(phi) * sigma_x() + std::sin(phi) * sigma_y(); }

Matrix2 rotation(double phi, double theta) {
  return std::cos(theta / 2) * Matrix2::Identity() -
         cplx(0, std::sin(theta / 2)) * pauli_phi(phi);
}

Matrix ladder(int n_max) {
  if (n_max < 1) throw InvalidArgument("n_max must be >= 1");
  Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Operator embed(const Matrix& block, Slot slot, const CompositeSpace& space) {
  const auto dims = space.dims();
  const int k = slot_index(slot);
  if (k < 0 || k > 3) throw InvalidArgument("slot index out of range");
  if (block.rows() != dims[k] || block.cols() != dims[k]) {
    throw InvalidArgument("block side " + std::to_string(block.rows()) +
                          " does not match slot dimension " + std::to_string(dims[k]));
  }
  // Row-major strides of the four tensor factors.
  int inner = 1;
  for (int s = k + 1; s < 4; ++s) inner *= dims[s];
  const int outer = space.total_dim() / (inner * dims[k]);

  const int n = space.total_dim();
  Matrix out = Matrix::Zero(n, n);
  for (int o = 0; o < outer; ++o) {
    for (int r = 0; r < dims[k]; ++r) {
      for (int c = 0; c < dims[k]; ++c) {
        const cplx v = block(r, c);
        if (v == cplx(0.0)) continue;
        const int row0 = (o * dims[k] + r) * inner;
        const int col0 = (o * dims[k] + c) * inner;
        for (int i = 0; i < inner; ++i) out(row0 + i, col0 + i) = v;
      }
    }
  }
  return Operator(space, std::move(out));
}

// ---------------------------------------------------------------------------------------
// Reduced states
// ---------------------------------------------------------------------------------------

Matrix4 partial_trace_motion(const CompositeSpace& space, const Matrix& rho) {
  const int m = space.motional_dim();
  if (rho.rows() != space.total_dim() || rho.cols() != space.total_dim()) {
    throw InvalidArgument("density matrix side does not match space dimension");
  }
  Matrix4 out;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      out(a, b) = rho.block(a * m, b * m, m, m).trace();
    }
  }
  return out;
}

Matrix4 partial_trace_motion(const CompositeState& state) {
  const CompositeSpace& space = state.space();
  if (state.is_pure()) {
    // Avoid forming the full outer product.
    const int m = space.motional_dim();
    const Vector& psi = state.vector();
    Matrix4 out;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        out(a, b) = psi.segment(b * m, m).dot(psi.segment(a * m, m));
      }
    }
    return out;
  }
  return partial_trace_motion(space, state.matrix());
}

double state_fidelity(const Matrix4& rho, const Vector4& target) {
  if (std::abs(target.norm() - 1.0) > kStateTol) {
    throw InvalidArgument("fidelity target is not normalized");
  }
  if (std::abs(rho.trace() - 1.0) > kStateTol || hermiticity_defect(rho) > kStateTol) {
    throw InvalidArgument("fidelity input is not a unit-trace Hermitian matrix");
  }
  const cplx f = target.dot(rho * target);
  return f.real();
}

double hermiticity_defect(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double purity(const Matrix& rho) { return (rho * rho).trace().real(); }

}  // namespace dualgate
