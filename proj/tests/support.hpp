#pragma once

// Random states and small reference constructions shared by the tests.

#include <cmath>
#include <random>

#include "spinq/linalg.hpp"

namespace spinq::testing {

inline ComplexMatrix ginibre(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = Complex(g(rng), g(rng));
  return x;
}

/// Mixed state X X^dagger / Tr with X of shape dim x rank.
inline DensityMatrix random_density(Eigen::Index dim, Eigen::Index rank, std::mt19937_64& rng) {
  const ComplexMatrix x = ginibre(dim, rank, rng);
  ComplexMatrix r = x * x.adjoint();
  r /= r.trace().real();
  return DensityMatrix(0.5 * (r + r.adjoint()));
}

inline ComplexVector random_pure(Eigen::Index dim, std::mt19937_64& rng) {
  ComplexVector v = ginibre(dim, 1, rng).col(0);
  return v / v.norm();
}

/// (|00> + |11> + |22>) / sqrt(3)
inline DensityMatrix maximally_entangled_qutrits() {
  ComplexVector v = ComplexVector::Zero(9);
  v(0) = v(4) = v(8) = 1.0 / std::sqrt(3.0);
  return DensityMatrix::from_pure(v);
}

/// sum_k (1/3) |kk><kk|
inline DensityMatrix classically_correlated_qutrits() {
  ComplexMatrix r = ComplexMatrix::Zero(9, 9);
  r(0, 0) = r(4, 4) = r(8, 8) = 1.0 / 3.0;
  return DensityMatrix(r);
}

}  // namespace spinq::testing
