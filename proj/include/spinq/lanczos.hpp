#pragma once

// Matrix-free Lanczos for the lowest eigenpair of a real symmetric operator.
// Full reorthogonalisation, explicit restarts from the current Ritz vector.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

namespace spinq {

/// y = H x. The callee must fully overwrite y.
using MatVec = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

struct LanczosOptions {
  double tol = 1e-9;        // residual |Hv - Ev| threshold
  bool relative = false;    // scale tol by max(1, |E|)
  int max_iter = 2000;      // total matrix-vector products across restarts
  int krylov_dim = 80;      // basis size before an explicit restart
  int max_breakdown_restarts = 3;
  std::uint64_t seed = 1;
};

struct LanczosResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
  int iterations = 0;
};

class LanczosError : public std::runtime_error {
 public:
  LanczosError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

Eigen::VectorXd random_unit_vector(Eigen::Index dim, std::uint64_t seed);

/// Lowest eigenpair. `start`, if given and non-zero, seeds the Krylov space.
LanczosResult lanczos_ground_state(const MatVec& apply, Eigen::Index dim, const LanczosOptions& opts,
                                   const std::optional<Eigen::VectorXd>& start = std::nullopt);

}  // namespace spinq
