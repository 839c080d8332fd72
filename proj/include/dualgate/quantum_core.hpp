#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <variant>

namespace dualgate {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;
using Vector4 = Eigen::Vector4cd;

inline constexpr double kPi = 3.14159265358979323846;

// Tensor slots, fixed order: [ion1-spin, ion2-spin, mode-c, mode-r].
enum class Slot : int { kIon1 = 0, kIon2 = 1, kModeCom = 2, kModeRocking = 3 };

inline constexpr int slot_index(Slot s) { return static_cast<int>(s); }

/// Two qubits and two bosonic modes, each mode truncated at `n_max` quanta.
///
/// Basis index of |q1, q2, n_c, n_r> is ((q1*2 + q2)*F + n_c)*F + n_r with F = n_max + 1,
/// so the two-qubit index is the slow index and the motional pair the fast one.
class CompositeSpace {
 public:
  explicit CompositeSpace(int n_max);

  int n_max() const { return n_max_; }
  int fock_dim() const { return n_max_ + 1; }
  int motional_dim() const { return fock_dim() * fock_dim(); }
  int total_dim() const { return 4 * motional_dim(); }
  std::array<int, 4> dims() const { return {2, 2, fock_dim(), fock_dim()}; }

  int index(int q1, int q2, int n_c, int n_r) const;

  friend bool operator==(const CompositeSpace&, const CompositeSpace&) = default;

 private:
  int n_max_;
};

CompositeSpace build_space(int n_max);

/// Square operator on a CompositeSpace.
class Operator {
 public:
  Operator(CompositeSpace space, Matrix matrix);

  static Operator zero(const CompositeSpace& space);
  static Operator identity(const CompositeSpace& space);
  // Throws InvalidArgument when the Hermiticity defect exceeds 1e-10.
  static Operator hermitian(CompositeSpace space, Matrix matrix);

  const CompositeSpace& space() const { return space_; }
  const Matrix& matrix() const { return matrix_; }
  bool is_hermitian_flagged() const { return hermitian_; }

  Operator adjoint() const;
  Operator operator*(const Operator& rhs) const;
  Operator operator+(const Operator& rhs) const;
  Operator operator-(const Operator& rhs) const;
  Operator operator*(cplx s) const;

 private:
  CompositeSpace space_;
  Matrix matrix_;
  bool hermitian_ = false;
};

/// Pure vector or density matrix on a CompositeSpace.
///
/// Construction validates the representation: unit norm (1e-9) for vectors, Hermiticity
/// and unit trace (1e-9) for density matrices. Positivity costs an eigensolve and is only
/// checked by validate_positive().
class CompositeState {
 public:
  static CompositeState pure(CompositeSpace space, Vector psi);
  static CompositeState density(CompositeSpace space, Matrix rho);
  // |q1 q2> (x) |n_c n_r>
  static CompositeState basis(const CompositeSpace& space, int q1, int q2, int n_c = 0,
                              int n_r = 0);

  const CompositeSpace& space() const { return space_; }
  bool is_pure() const { return std::holds_alternative<Vector>(data_); }
  const Vector& vector() const;
  const Matrix& matrix() const;
  Matrix density_matrix() const;

  // Smallest eigenvalue must exceed -tol.
  void validate_positive(double tol = 1e-8) const;

 private:
  CompositeState(CompositeSpace space, std::variant<Vector, Matrix> data)
      : space_(space), data_(std::move(data)) {}

  CompositeSpace space_;
  std::variant<Vector, Matrix> data_;
};

// 2x2 blocks. Qubit basis order is (|0>, |1>), sigma_z = diag(1, -1).
Matrix2 sigma_x();
Matrix2 sigma_y();
Matrix2 sigma_z();
// cos(phi) sigma_x + sin(phi) sigma_y
Matrix2 pauli_phi(double phi);
// exp(-i theta/2 sigma_phi)
Matrix2 rotation(double phi, double theta);

/// Truncated annihilation operator on n_max + 1 Fock states. a|n> = sqrt(n)|n-1>; a^dag maps
/// |n_max> to zero, so [a, a^dag] = 1 holds only below the top row.
Matrix ladder(int n_max);

Operator embed(const Matrix& block, Slot slot, const CompositeSpace& space);

Matrix4 partial_trace_motion(const CompositeState& state);
Matrix4 partial_trace_motion(const CompositeSpace& space, const Matrix& rho);

// <target|rho|target>; rho must be a 4x4 density matrix and target a unit vector.
double state_fidelity(const Matrix4& rho, const Vector4& target);

double hermiticity_defect(const Matrix& m);
double purity(const Matrix& rho);

}  // namespace dualgate
