#include "spinq/lanczos.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace spinq {

Eigen::VectorXd random_unit_vector(Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = gauss(rng);
  return v / v.norm();
}

namespace {

struct Attempt {
  LanczosResult result;
  bool converged = false;
  bool breakdown = false;
};

// One Krylov cycle of at most `kdim` vectors starting from unit vector v0.
Attempt krylov_cycle(const MatVec& apply, const Eigen::VectorXd& v0, int kdim, double base_tol,
                     bool relative, int budget) {
  const Eigen::Index n = v0.size();
  kdim = static_cast<int>(std::min<Eigen::Index>(kdim, n));
  kdim = std::max(1, std::min(kdim, budget));
  Eigen::MatrixXd basis(n, kdim);
  Eigen::VectorXd alpha(kdim), beta(kdim);
  Eigen::VectorXd w(n);
  basis.col(0) = v0;

  Attempt out;
  int used = 0;
  Eigen::VectorXd ritz;
  double theta = 0.0;
  for (int j = 0; j < kdim; ++j) {
    apply(basis.col(j), w);
    ++used;
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd h = basis.leftCols(j + 1).transpose() * w;
      w.noalias() -= basis.leftCols(j + 1) * h;
      alpha(j) = pass == 0 ? h(j) : alpha(j) + h(j);
    }
    beta(j) = w.norm();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    const int k = j + 1;
    if (k == 1) {
      theta = alpha(0);
      ritz = Eigen::VectorXd::Ones(1);
    } else {
      tri.computeFromTridiagonal(alpha.head(k), beta.head(k - 1), Eigen::ComputeEigenvectors);
      theta = tri.eigenvalues()(0);
      ritz = tri.eigenvectors().col(0);
    }
    const double tol = relative ? base_tol * std::max(1.0, std::abs(theta)) : base_tol;
    const double est = std::abs(beta(j) * ritz(k - 1));
    const bool breakdown = beta(j) < 1e-13 * std::max(1.0, std::abs(theta));
    if (est < tol || breakdown || j + 1 == kdim) {
      out.result.vector = basis.leftCols(k) * ritz;
      out.result.vector.normalize();
      out.result.value = theta;
      out.result.iterations = used;
      out.breakdown = breakdown;
      apply(out.result.vector, w);
      ++out.result.iterations;
      w -= theta * out.result.vector;
      out.result.residual = w.norm();
      out.converged = out.result.residual < tol || (breakdown && out.result.residual < 10 * tol);
      return out;
    }
    basis.col(j + 1) = w / beta(j);
  }
  return out;  // unreachable
}

}  // namespace

LanczosResult lanczos_ground_state(const MatVec& apply, Eigen::Index dim, const LanczosOptions& opts,
                                   const std::optional<Eigen::VectorXd>& start) {
  if (dim <= 0) throw std::invalid_argument("lanczos: empty space");
  Eigen::VectorXd v;
  bool random_start = true;
  if (start && start->size() == dim && start->norm() > 0) {
    v = *start / start->norm();
    random_start = false;
  } else {
    v = random_unit_vector(dim, opts.seed);
  }

  int total = 0;
  int breakdown_restarts = 0;
  double last_residual = std::numeric_limits<double>::infinity();
  while (total < opts.max_iter) {
    Attempt a = krylov_cycle(apply, v, opts.krylov_dim, opts.tol, opts.relative, opts.max_iter - total);
    total += a.result.iterations;
    last_residual = a.result.residual;
    if (a.converged) {
      // A breakdown from a non-random start can miss the true ground state;
      // confirm from a fresh random vector.
      if (a.breakdown && !random_start) {
        if (++breakdown_restarts > opts.max_breakdown_restarts) break;
        v = random_unit_vector(dim, opts.seed + 7919 * breakdown_restarts);
        random_start = true;
        continue;
      }
      a.result.iterations = total;
      return a.result;
    }
    if (a.breakdown) {
      if (++breakdown_restarts > opts.max_breakdown_restarts) break;
      v = random_unit_vector(dim, opts.seed + 7919 * breakdown_restarts);
      random_start = true;
      continue;
    }
    v = a.result.vector;
  }
  std::ostringstream os;
  os << "lanczos did not converge: residual " << last_residual << " after " << total
     << " matrix-vector products (tol " << opts.tol << ")";
  throw LanczosError(os.str(), last_residual);
}

}  // namespace spinq
