#pragma once

// Dense complex linear algebra shared by every other module.
//
// Index convention: in a bipartite space A ⊗ B the composite index is
// i = iA * dB + iB, i.e. the left factor is the slow index. tensor_product,
// partial_trace, the DMRG superblock and the exact-diagonalization basis all
// follow it.

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spinq {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Raised when an operation's preconditions are not met (shape, Hermiticity, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a matrix expected to be positive semidefinite has a clearly negative eigenvalue.
class PsdViolation : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

enum class Subsystem { A, B };

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kEntropyZero = 1e-12;

/// Largest entry of |M - M^dagger|.
double hermiticity_defect(const ComplexMatrix& m);

bool all_finite(const ComplexMatrix& m);

/// Hermitian, positive semidefinite, unit-trace matrix. Construction validates
/// the invariants; the stored matrix is exactly Hermitian ((M + M^dagger)/2).
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(ComplexMatrix m);

  /// Pure state |v><v| (v is normalised first).
  static DensityMatrix from_pure(const ComplexVector& v);
  static DensityMatrix maximally_mixed(Eigen::Index dim);

  Eigen::Index dim() const { return matrix_.rows(); }
  const ComplexMatrix& matrix() const { return matrix_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return matrix_(i, j); }

 private:
  ComplexMatrix matrix_;
};

struct HermitianEigen {
  RealVector values;     // ascending
  ComplexMatrix vectors; // columns are eigenvectors
};

HermitianEigen eig_hermitian(const ComplexMatrix& m);

/// Eigenvalues only, ascending.
RealVector eigvals_hermitian(const ComplexMatrix& m);

/// Principal square root of a density matrix. Eigenvalues below a few ulps of
/// the largest one (including kPsdTol-small negatives) are treated as 0.
ComplexMatrix matrix_sqrt_psd(const DensityMatrix& rho);

/// Kronecker product with composite index i = i1 * dim2 + i2.
ComplexMatrix tensor_product(const ComplexMatrix& m1, const ComplexMatrix& m2);

/// Trace out `traced` from a state on C^dA ⊗ C^dB.
DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem traced, Eigen::Index dim_a,
                            Eigen::Index dim_b);
ComplexMatrix partial_trace(const ComplexMatrix& m, Subsystem traced, Eigen::Index dim_a,
                            Eigen::Index dim_b);

/// -sum p log2 p over eigenvalues, with eigenvalues below kEntropyZero dropped.
double entropy_of_spectrum(const RealVector& eigenvalues);
double von_neumann_entropy(const DensityMatrix& rho);

/// Trace norm distance 0.5 * ||a - b||_1.
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace spinq
