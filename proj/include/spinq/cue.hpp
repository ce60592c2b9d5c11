#pragma once

// Haar-random unitaries from Euler angles, measurement bases and Naimark
// dilation of POVMs.
//
// Angle layout for dimension N: x0 = (alpha, chi_1..chi_{N-1}, phi, psi) where
// phi and psi are (N-1)x(N-1) matrices stored row-major, entry [j][k-1]. Only
// the upper triangle j <= k-1 enters the unitary; the remaining entries are
// carried along but have no effect.
//
//   U   = e^{i alpha} E_1 E_2 ... E_{N-1}
//   E_k = R(k-1, k) R(k-2, k) ... R(0, k)
//
// R(j, k) rotates the adjacent pair of basis vectors (N-2-j, N-1-j) with angles
// phi[j][k-1], psi[j][k-1] and, for j = 0 only, chi_k.

#include <cstdint>
#include <random>
#include <vector>

#include "spinq/linalg.hpp"

namespace spinq {

struct EulerAngleVector {
  int n = 0;
  std::vector<double> x0;  // length 2(N-1)^2 + N

  static std::size_t length(int n) { return static_cast<std::size_t>(2 * (n - 1) * (n - 1) + n); }
  double alpha() const { return x0[0]; }
  double chi(int k) const { return x0[k]; }  // k = 1..N-1
  double phi(int j, int k) const { return x0[n + j * (n - 1) + (k - 1)]; }
  double psi(int j, int k) const { return x0[n + (n - 1) * (n - 1) + j * (n - 1) + (k - 1)]; }
  double& phi(int j, int k) { return x0[n + j * (n - 1) + (k - 1)]; }
  double& psi(int j, int k) { return x0[n + (n - 1) * (n - 1) + j * (n - 1) + (k - 1)]; }

  /// Zero angles of the right length.
  static EulerAngleVector zeros(int n);
  /// Throws unless the length matches and every angle is in range.
  void validate() const;
};

ComplexMatrix unitary_from_angles(const EulerAngleVector& angles);

/// Angles with alpha, psi, chi uniform in [0, 2pi) and
/// phi[j][k-1] = arcsin(xi^(1 / (2j + 2))), xi uniform in [0, 1).
EulerAngleVector sample_cue_angles(int n, std::mt19937_64& rng);
ComplexMatrix sample_cue(int n, std::uint64_t seed);
ComplexMatrix sample_cue(int n, std::mt19937_64& rng);

/// Seed splitting used everywhere a root seed feeds independent tasks.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

class MeasurementBasis {
 public:
  MeasurementBasis() = default;
  /// Rank-1 projectors onto the columns of a unitary.
  explicit MeasurementBasis(ComplexMatrix u);

  Eigen::Index dim() const { return vectors_.rows(); }
  const ComplexMatrix& vectors() const { return vectors_; }
  ComplexMatrix projector(Eigen::Index k) const { return vectors_.col(k) * vectors_.col(k).adjoint(); }
  std::vector<ComplexMatrix> projectors() const;

 private:
  ComplexMatrix vectors_;
};

MeasurementBasis basis_from_unitary(const ComplexMatrix& u);

class Povm {
 public:
  Povm() = default;
  /// Validates positivity (1e-9) and completeness (1e-10).
  explicit Povm(std::vector<ComplexMatrix> elements);

  Eigen::Index dim() const { return elements_.empty() ? 0 : elements_.front().rows(); }
  std::size_t outcomes() const { return elements_.size(); }
  const std::vector<ComplexMatrix>& elements() const { return elements_; }

 private:
  std::vector<ComplexMatrix> elements_;
};

/// Random POVM with `outcomes` elements built from normalised Wishart parts.
Povm random_povm(int dim, int outcomes, std::mt19937_64& rng);

struct NaimarkDilation {
  Eigen::Index x = 0;                 // system dimension
  Eigen::Index y = 0;                 // number of outcomes
  ComplexMatrix isometry_a;           // xy × x, sum_a sqrt(P_a) ⊗ |e_a>
  ComplexMatrix unitary_u;            // xy × xy with U (I ⊗ |u>) = A
  ComplexVector ancilla_u;            // |u> = |e_0>
  std::vector<ComplexMatrix> projectors_q;  // Q_a = U^dagger (I ⊗ |e_a><e_a|) U

  /// rho ⊗ |u><u| on the dilated space.
  ComplexMatrix embed(const ComplexMatrix& rho) const;
};

NaimarkDilation naimark_dilation(const Povm& p);

/// Random unitary completion of the columns of `partial` (orthonormal
/// columns), deterministic for a fixed seed.
ComplexMatrix complete_unitary(const ComplexMatrix& partial, std::uint64_t seed);

}  // namespace spinq
