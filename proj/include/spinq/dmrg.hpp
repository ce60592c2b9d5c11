#pragma once

// Infinite-system DMRG for reflection-symmetric spin-1 chains.
//
// The chain is grown two sites at a time: superblock = block + site + site +
// mirrored block. The bond between the two central sites always uses the exact
// 9x9 bond operator. Blocks carry total-S^z labels and every dense operation
// is performed sector by sector.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinq/linalg.hpp"
#include "spinq/models.hpp"

namespace spinq {

/// Renormalised block. Basis states are sorted by their S^z label.
struct Block {
  int sites = 0;
  std::vector<int> sz;                       // one label per basis state, non-decreasing
  Eigen::MatrixXd hamiltonian;               // block Hamiltonian in the kept basis
  std::vector<Eigen::MatrixXd> edge_operators; // left factors of the bond terms on the boundary site

  Eigen::Index dim() const { return static_cast<Eigen::Index>(sz.size()); }
};

/// Single-site block for the given bond decomposition.
Block single_site_block(const std::vector<BondTerm>& terms);

/// Which central bond the final two-site density matrix describes. In the
/// dimerised phase the central bond alternates between strong and weak with
/// every growth step; `average` mixes the last two steps.
enum class CentralBond { last, average, even, odd };

struct DmrgConfig {
  int m = 100;                        // kept states per block
  int max_iterations = 400;           // growth steps; step k has chain length 2k + 2
  int min_iterations = 10;
  double lanczos_tol = 1e-9;          // residual relative to max(1, |E|)
  int lanczos_max_iter = 4000;
  int lanczos_krylov = 60;
  double energy_convergence_tol = 1e-9;
  int convergence_window = 5;         // consecutive steps below tolerance
  double target_sz = 0.0;             // total S^z sector (integer valued)
  std::optional<double> target_sz_per_site; // overrides target_sz: sector = round(value * length)
  std::uint64_t seed = 1;
  bool auto_m = false;                // raise m while the step truncation error is above auto_m_target
  int m_max = 200;
  double auto_m_target = 1e-6;
  bool predict_wavefunction = true;   // translate the previous ground state as Lanczos start
  CentralBond central_bond = CentralBond::last;
  /// Average the final two-site state over site exchange and, in the S^z = 0
  /// sector, over the global spin flip. Near-degenerate symmetry-broken
  /// states then give the RDM of the symmetric combination.
  bool symmetrize = true;
  std::string checkpoint_path;        // empty: no checkpoints

  void validate() const;
};

struct DmrgResult {
  double energy_per_site = 0.0;       // (E_n - E_{n-1}) / 2
  double energy_per_site_naive = 0.0; // E_n / L
  double total_energy = 0.0;
  int chain_length = 0;
  int target_sz = 0;
  DensityMatrix rho_two_site;         // 9x9, central bond
  DensityMatrix rho_one_site;         // 3x3, left central site
  std::vector<double> truncation_errors;
  std::vector<double> energies;       // superblock energy per step
  int iterations_used = 0;
  int final_m = 0;
  bool converged = false;
};

struct GrowStep {
  Block left;
  Block right;
  double superblock_energy = 0.0;
  /// Ground state psi(e_left, e_right) in the enlarged bases (block ⊗ site,
  /// sorted by S^z label). Zero outside the target sector.
  Eigen::MatrixXd ground_vector;
  std::vector<int> enlarged_sz;
  double truncation_error = 0.0;
  DensityMatrix rho_two_site;
};

/// One infinite-system step. `right` must be the mirror image of `left`.
GrowStep grow_step(const Block& left, const Block& right, const ModelSpec& spec,
                   const DmrgConfig& cfg, int target_sz);

struct Truncation {
  ComplexMatrix projector;        // columns: kept eigenvectors
  double truncation_error = 0.0;
  std::vector<int> kept;          // indices into the ascending eigenvalue list
};

/// Keep the m dominant eigenvectors of a block density matrix. Degenerate
/// multiplets at the cut are kept whole when that exceeds m by at most 10%.
Truncation truncate(const DensityMatrix& block_rdm, int m);

/// Kept-state selection on raw weights; labels break ties among degenerate weights.
/// Returns indices into `weights`, ordered by descending weight.
std::vector<int> select_kept_states(const std::vector<double>& weights, const std::vector<int>& labels,
                                    int m);

DmrgResult dmrg_ground_state(const ModelSpec& spec, const DmrgConfig& cfg);

}  // namespace spinq
