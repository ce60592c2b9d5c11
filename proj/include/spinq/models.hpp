#pragma once

// Spin-1 operators and the two nearest-neighbour chain models.
//
// Single-site basis ordering is |m=+1>, |m=0>, |m=-1>; basis index i carries
// magnetisation m = 1 - i. This is also the incoherent reference basis used by
// the coherence measures.

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spinq/linalg.hpp"

namespace spinq {

struct Spin1Algebra {
  ComplexMatrix sx;
  ComplexMatrix sy;
  ComplexMatrix sz;
  ComplexMatrix identity;
};

Spin1Algebra spin1_operators();

/// Magnetisation of single-site basis state i.
constexpr int site_magnetization(int i) { return 1 - i; }

enum class ModelKind { XXZ, BLBQ };

/// Which Hamiltonian and its single active parameter. theta is in radians.
class ModelSpec {
 public:
  static ModelSpec xxz(double delta);
  static ModelSpec blbq(double theta);
  /// Convenience: theta given in units of pi.
  static ModelSpec blbq_pi(double theta_over_pi);

  ModelKind kind() const { return kind_; }
  double delta() const;
  double theta() const;
  /// Delta for XXZ, theta/pi for BLBQ (the axis used by sweeps).
  double parameter() const;

  std::string to_string() const;

 private:
  ModelSpec(ModelKind kind, double value) : kind_(kind), value_(value) {}
  ModelKind kind_;
  double value_;
};

/// Parse `xxz:delta=<float>` or `blbq:theta=<float in units of pi>`.
ModelSpec parse_model_spec(std::string_view text);

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// 9x9 Hermitian bond operator h acting on two neighbouring sites.
ComplexMatrix bond_operator(const ModelSpec& spec);

/// Total S^z of two sites, S^z ⊗ I + I ⊗ S^z.
ComplexMatrix two_site_total(const ComplexMatrix& single);

/// One term of a charge-resolved operator-Schmidt decomposition of a real bond
/// operator: h = sum_k left_k ⊗ right_k, where left_k raises S^z by `charge`
/// and right_k lowers it by the same amount.
struct BondTerm {
  Eigen::Matrix3d left;
  Eigen::Matrix3d right;
  int charge = 0;
};

/// Decompose a magnetisation-conserving real 9x9 bond operator. Throws
/// ContractViolation if the operator has imaginary parts or breaks S^z
/// conservation.
std::vector<BondTerm> decompose_bond(const ComplexMatrix& bond);

/// Dense Hamiltonian of an open chain of n_sites built from Kronecker
/// products (dimension 3^n). Intended for small n and reference checks.
ComplexMatrix open_chain_hamiltonian(const ModelSpec& spec, int n_sites);

}  // namespace spinq
