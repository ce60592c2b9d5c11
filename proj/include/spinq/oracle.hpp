#pragma once

// Reference implementations used to validate the DMRG engine and the discord
// optimizer: exact diagonalisation of short open chains and a brute-force
// discord search that shares no code with the measures module's optimizer.

#include <cstdint>
#include <optional>
#include <vector>

#include "spinq/linalg.hpp"
#include "spinq/models.hpp"

namespace spinq {

inline constexpr int kMaxEdSites = 14;

struct EdOptions {
  double tol = 1e-10;          // absolute Lanczos residual
  int max_iter = 5000;
  bool compute_gap = true;     // second Lanczos run for the degeneracy flag
  std::uint64_t seed = 7;
};

struct EdResult {
  double energy = 0.0;
  ComplexVector ground_vector;    // full 3^N basis, site 0 is the slowest index
  double residual = 0.0;
  std::optional<double> gap;      // to the next level in the same sector
  bool degeneracy_flag = false;   // gap below 1e-10 (or below the solver's resolution)
  int n_sites = 0;
};

/// Lowest eigenpair of the open chain sum_i h_{i,i+1}. With target_sz the
/// search is restricted to that total-S^z sector.
EdResult ed_ground_state(const ModelSpec& spec, int n_sites, std::optional<double> target_sz = std::nullopt,
                         const EdOptions& opts = {});

/// Reduced density matrix on the listed sites (in the given order) of a state
/// on n_sites spin-1 sites.
DensityMatrix rdm_from_vector(const ComplexVector& v, int n_sites, const std::vector<int>& sites);

struct BruteForceOptions {
  int samples = 10000;
  int polish = 10;          // best samples handed to the local polish
  int polish_iters = 2000;
  std::uint64_t seed = 12345;
};

/// I - max C over projective measurements on subsystem B of a two-qutrit
/// state, found by Haar sampling followed by simplex polish.
double brute_force_discord(const DensityMatrix& rho_ab, const BruteForceOptions& opts = {});

/// Classical correlation S(rho_A) - sum_k p_k S(rho_A|k) for the basis given by
/// the columns of u, computed straight from the definition.
double measured_information(const DensityMatrix& rho_ab, const ComplexMatrix& u);

/// Haar unitary from the QR decomposition of a complex Ginibre matrix.
ComplexMatrix haar_unitary_qr(int n, std::uint64_t seed);

}  // namespace spinq
