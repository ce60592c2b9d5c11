#pragma once

// Correlation and coherence measures on bipartite (two-site) and single-site
// states. All entropies are in bits.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spinq/cue.hpp"
#include "spinq/linalg.hpp"
#include "spinq/models.hpp"

namespace spinq {

enum class MeasurementMode { projective, povm };

struct DiscordConfig {
  int restarts = 50;
  int polish_max_iter = 3000;
  double polish_tol = 1e-8;
  Subsystem measurement_side = Subsystem::B;
  MeasurementMode mode = MeasurementMode::projective;
  int povm_outcomes = 4;
  std::uint64_t seed = 1;

  void validate() const;
};

struct DiscordResult {
  double discord = 0.0;
  double classical_correlation = 0.0;
  double mutual_information = 0.0;
  MeasurementBasis optimal_basis;       // projective mode
  std::optional<Povm> optimal_povm;     // povm mode
  int restarts_within_tol = 0;
};

double mutual_information(const DensityMatrix& rho_ab, Eigen::Index dim_a, Eigen::Index dim_b);

struct ConditionalState {
  double probability = 0.0;
  DensityMatrix state;   // maximally mixed placeholder when the branch is empty
  bool empty = false;    // probability below 1e-14; excluded from entropy sums
};

/// p_k = Tr[(I ⊗ Pi) rho], rho_A|k = Tr_B[(I ⊗ Pi) rho] / p_k for a measurement
/// operator Pi on B (a projector or POVM element).
ConditionalState conditional_state(const DensityMatrix& rho_ab, const ComplexMatrix& pi, Eigen::Index dim_a,
                                   Eigen::Index dim_b);

/// S(rho_A) - sum_k p_k S(rho_A|k) for a fixed set of measurement operators on B.
double measured_correlation(const DensityMatrix& rho_ab, const std::vector<ComplexMatrix>& effects,
                            Eigen::Index dim_a, Eigen::Index dim_b);

struct ClassicalCorrelation {
  double value = 0.0;
  MeasurementBasis basis;
  std::optional<Povm> povm;
  int restarts_within_tol = 0;
};

ClassicalCorrelation classical_correlation(const DensityMatrix& rho_ab, Eigen::Index dim_a, Eigen::Index dim_b,
                                           const DiscordConfig& cfg = {});

DiscordResult quantum_discord(const DensityMatrix& rho_ab, Eigen::Index dim_a, Eigen::Index dim_b,
                              const DiscordConfig& cfg = {});

/// Swap the two factors of a state on C^dA ⊗ C^dB.
DensityMatrix swap_subsystems(const DensityMatrix& rho, Eigen::Index dim_a, Eigen::Index dim_b);

/// Coherence measures relative to the columns of `reference` (default: the
/// S^z product basis, i.e. the identity).
double rel_entropy_coherence(const DensityMatrix& rho, const std::optional<ComplexMatrix>& reference = std::nullopt);
double l1_coherence(const DensityMatrix& rho, const std::optional<ComplexMatrix>& reference = std::nullopt);

/// -1/2 Tr([sqrt(rho), K]^2)
double skew_information(const DensityMatrix& rho, const ComplexMatrix& k);

/// Tr(rho K^2) - Tr(rho K)^2
double variance(const DensityMatrix& rho, const ComplexMatrix& k);

/// I ⊗ K (side B) or K ⊗ I (side A).
ComplexMatrix local_observable(const ComplexMatrix& k, Subsystem side);

// Fingerprints of an optimal measurement basis, invariant under the freedoms
// that leave the measured information unchanged (column order, column phases)
// and under the model's continuous symmetry.
enum class FingerprintKind { sz_populations, spin_lengths };

FingerprintKind fingerprint_kind_for(ModelKind model);
std::vector<double> basis_fingerprint(const MeasurementBasis& basis, FingerprintKind kind);
/// Distance between two fingerprints of the same kind (radians for populations).
double fingerprint_distance(const std::vector<double>& a, const std::vector<double>& b, FingerprintKind kind);

}  // namespace spinq
