#include "spinq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace spinq {

double hermiticity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

DensityMatrix::DensityMatrix(ComplexMatrix m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw ContractViolation("density matrix must be square and non-empty");
  if (!all_finite(m)) throw ContractViolation("density matrix has non-finite entries");
  const double herm = hermiticity_defect(m);
  if (herm > kHermitianTol) {
    std::ostringstream os;
    os << "density matrix not Hermitian (defect " << herm << ")";
    throw ContractViolation(os.str());
  }
  matrix_ = 0.5 * (m + m.adjoint());
  const double tr = matrix_.trace().real();
  if (std::abs(tr - 1.0) > kTraceTol) {
    std::ostringstream os;
    os << "density matrix trace " << tr << " differs from 1";
    throw ContractViolation(os.str());
  }
  const double lo = eigvals_hermitian(matrix_)(0);
  if (lo < -kPsdTol) {
    std::ostringstream os;
    os << "density matrix has eigenvalue " << lo << " below PSD tolerance";
    throw PsdViolation(os.str());
  }
}

DensityMatrix DensityMatrix::from_pure(const ComplexVector& v) {
  const double n = v.norm();
  if (n == 0.0) throw ContractViolation("cannot build a pure state from a zero vector");
  const ComplexVector u = v / n;
  return DensityMatrix(u * u.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index dim) {
  return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

HermitianEigen eig_hermitian(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw ContractViolation("eig_hermitian: matrix is not square");
  if (hermiticity_defect(m) > kHermitianTol)
    throw ContractViolation("eig_hermitian: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
  if (es.info() != Eigen::Success) throw std::runtime_error("eig_hermitian: solver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

RealVector eigvals_hermitian(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigvals_hermitian: solver failed");
  return es.eigenvalues();
}

ComplexMatrix matrix_sqrt_psd(const DensityMatrix& rho) {
  const auto eig = eig_hermitian(rho.matrix());
  RealVector roots(eig.values.size());
  // Eigenvalues at rounding level would leave ~1e-8 entries after the root.
  const double floor = 4.0 * static_cast<double>(roots.size()) * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, eig.values.maxCoeff());
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    const double v = eig.values(i);
    if (v < -kPsdTol) throw PsdViolation("matrix_sqrt_psd: negative eigenvalue");
    roots(i) = v > floor ? std::sqrt(v) : 0.0;
  }
  return eig.vectors * roots.asDiagonal() * eig.vectors.adjoint();
}

ComplexMatrix tensor_product(const ComplexMatrix& m1, const ComplexMatrix& m2) {
  ComplexMatrix out(m1.rows() * m2.rows(), m1.cols() * m2.cols());
  for (Eigen::Index i = 0; i < m1.rows(); ++i)
    for (Eigen::Index j = 0; j < m1.cols(); ++j)
      out.block(i * m2.rows(), j * m2.cols(), m2.rows(), m2.cols()) = m1(i, j) * m2;
  return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, Subsystem traced, Eigen::Index dim_a,
                            Eigen::Index dim_b) {
  if (dim_a <= 0 || dim_b <= 0 || m.rows() != dim_a * dim_b || m.cols() != m.rows())
    throw ContractViolation("partial_trace: dimensions do not factorise the matrix");
  if (traced == Subsystem::B) {
    ComplexMatrix out = ComplexMatrix::Zero(dim_a, dim_a);
    for (Eigen::Index i = 0; i < dim_a; ++i)
      for (Eigen::Index j = 0; j < dim_a; ++j)
        out(i, j) = m.block(i * dim_b, j * dim_b, dim_b, dim_b).trace();
    return out;
  }
  ComplexMatrix out = ComplexMatrix::Zero(dim_b, dim_b);
  for (Eigen::Index a = 0; a < dim_a; ++a) out += m.block(a * dim_b, a * dim_b, dim_b, dim_b);
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem traced, Eigen::Index dim_a,
                            Eigen::Index dim_b) {
  return DensityMatrix(partial_trace(rho.matrix(), traced, dim_a, dim_b));
}

double entropy_of_spectrum(const RealVector& eigenvalues) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double p = eigenvalues(i);
    if (p > kEntropyZero) s -= p * std::log2(p);
  }
  return s;
}

double von_neumann_entropy(const DensityMatrix& rho) {
  return entropy_of_spectrum(eigvals_hermitian(rho.matrix()));
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  const ComplexMatrix d = a - b;
  return 0.5 * eigvals_hermitian(0.5 * (d + d.adjoint())).cwiseAbs().sum();
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b - b * a; }

}  // namespace spinq
