#include "spinq/measures.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include <gsl/gsl_multimin.h>

namespace spinq {

namespace {

constexpr double kEmptyBranch = 1e-14;

// Blocks R[b][b'] (dA x dA) of rho[a b, a' b'].
std::vector<ComplexMatrix> b_blocks(const ComplexMatrix& rho, Eigen::Index da, Eigen::Index db) {
  std::vector<ComplexMatrix> r(db * db, ComplexMatrix(da, da));
  for (Eigen::Index b = 0; b < db; ++b)
    for (Eigen::Index bp = 0; bp < db; ++bp)
      for (Eigen::Index a = 0; a < da; ++a)
        for (Eigen::Index ap = 0; ap < da; ++ap) r[b * db + bp](a, ap) = rho(a * db + b, ap * db + bp);
  return r;
}

// p * S(M / p) computed from the unnormalised conditional block M.
double weighted_entropy(const ComplexMatrix& m, double p) {
  if (p < kEmptyBranch) return 0.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double l = es.eigenvalues()(i) / p;
    if (l > kEntropyZero) s -= l * std::log2(l);
  }
  return p * s;
}

class CorrelationObjective {
 public:
  CorrelationObjective(const DensityMatrix& rho, Eigen::Index da, Eigen::Index db)
      : da_(da), db_(db), blocks_(b_blocks(rho.matrix(), da, db)) {
    s_a_ = von_neumann_entropy(partial_trace(rho, Subsystem::B, da, db));
  }

  double s_a() const { return s_a_; }

  // Measurement operators given as effects on B.
  double value(const std::vector<ComplexMatrix>& effects) const {
    double cond = 0.0;
    ComplexMatrix m(da_, da_);
    for (const auto& e : effects) {
      m.setZero();
      for (Eigen::Index b = 0; b < db_; ++b)
        for (Eigen::Index bp = 0; bp < db_; ++bp) {
          const Complex w = e(bp, b);
          if (w != Complex(0.0, 0.0)) m += w * blocks_[b * db_ + bp];
        }
      m = 0.5 * (m + m.adjoint()).eval();
      cond += weighted_entropy(m, m.trace().real());
    }
    return s_a_ - cond;
  }

  // Rank-1 projectors onto the columns of u.
  double value_basis(const ComplexMatrix& u) const {
    double cond = 0.0;
    ComplexMatrix m(da_, da_);
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
      m.setZero();
      for (Eigen::Index b = 0; b < db_; ++b)
        for (Eigen::Index bp = 0; bp < db_; ++bp) m += (std::conj(u(b, k)) * u(bp, k)) * blocks_[b * db_ + bp];
      m = 0.5 * (m + m.adjoint()).eval();
      cond += weighted_entropy(m, m.trace().real());
    }
    return s_a_ - cond;
  }

 private:
  Eigen::Index da_, db_;
  std::vector<ComplexMatrix> blocks_;
  double s_a_ = 0.0;
};

void wrap_angles(EulerAngleVector& a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const auto cyc = [](double v) {
    double t = std::fmod(v, two_pi);
    if (t < 0) t += two_pi;
    return t >= two_pi ? 0.0 : t;
  };
  const int n = a.n;
  a.x0[0] = cyc(a.x0[0]);
  for (int k = 1; k < n; ++k) a.x0[k] = cyc(a.x0[k]);
  for (int j = 0; j < n - 1; ++j)
    for (int k = 1; k < n; ++k) {
      a.psi(j, k) = cyc(a.psi(j, k));
      double t = std::fmod(a.phi(j, k), std::numbers::pi);
      if (t < 0) t += std::numbers::pi;
      if (t > std::numbers::pi / 2) t = std::numbers::pi - t;
      a.phi(j, k) = t;
    }
}

ComplexMatrix unitary_from_raw(int n, const double* x) {
  EulerAngleVector a{n, std::vector<double>(x, x + EulerAngleVector::length(n))};
  wrap_angles(a);
  return unitary_from_angles(a);
}

struct GslTarget {
  std::function<double(const double*)> f;
};

double gsl_trampoline(const gsl_vector* x, void* params) {
  const double v = static_cast<GslTarget*>(params)->f(x->data);
  return std::isfinite(v) ? v : 1e100;
}

// Minimise f from x (updated in place) with the simplex method; one fresh
// simplex is rebuilt around the first optimum to escape premature collapse.
double simplex_minimise(const std::function<double(const double*)>& f, std::vector<double>& x, int max_iter,
                        double tol) {
  const std::size_t n = x.size();
  GslTarget target{f};
  gsl_multimin_function fn{&gsl_trampoline, n, &target};
  gsl_vector* gx = gsl_vector_alloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  double best = f(x.data());
  int used = 0;
  for (int round = 0; round < 2 && used < max_iter; ++round) {
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(gx, i, x[i]);
    gsl_vector_set_all(step, round == 0 ? 0.5 : 0.05);
    gsl_multimin_fminimizer_set(s, &fn, gx, step);
    while (used < max_iter) {
      ++used;
      if (gsl_multimin_fminimizer_iterate(s)) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), tol) == GSL_SUCCESS) break;
    }
    if (s->fval <= best) {
      best = s->fval;
      for (std::size_t i = 0; i < n; ++i) x[i] = gsl_vector_get(s->x, i);
    }
  }
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(gx);
  return best;
}

std::vector<ComplexMatrix> povm_from_dilation(const ComplexMatrix& w, Eigen::Index db, Eigen::Index y) {
  // P_a = V^dagger W^dagger (I ⊗ |e_a><e_a|) W V, V = I ⊗ |e_0>
  ComplexMatrix iso(db * y, db);
  for (Eigen::Index b = 0; b < db; ++b) iso.col(b) = w.col(b * y);
  std::vector<ComplexMatrix> effects(y, ComplexMatrix::Zero(db, db));
  for (Eigen::Index a = 0; a < y; ++a)
    for (Eigen::Index i = 0; i < db; ++i) {
      const auto row = iso.row(i * y + a);
      effects[a] += row.adjoint() * row;
    }
  return effects;
}

}  // namespace

void DiscordConfig::validate() const {
  if (restarts < 1) throw ContractViolation("discord: restarts must be >= 1");
  if (polish_max_iter < 1) throw ContractViolation("discord: polish_max_iter must be >= 1");
  if (!(polish_tol > 0)) throw ContractViolation("discord: polish_tol must be positive");
  if (mode == MeasurementMode::povm && povm_outcomes < 1) throw ContractViolation("discord: povm_outcomes must be >= 1");
}

double mutual_information(const DensityMatrix& rho_ab, Eigen::Index dim_a, Eigen::Index dim_b) {
  const double sa = von_neumann_entropy(partial_trace(rho_ab, Subsystem::B, dim_a, dim_b));
  const double sb = von_neumann_entropy(partial_trace(rho_ab, Subsystem::A, dim_a, dim_b));
  return sa + sb - von_neumann_entropy(rho_ab);
}

ConditionalState conditional_state(const DensityMatrix& rho_ab, const ComplexMatrix& pi, Eigen::Index dim_a,
                                   Eigen::Index dim_b) {
  if (rho_ab.dim() != dim_a * dim_b) throw ContractViolation("conditional_state: dimension mismatch");
  if (pi.rows() != dim_b || pi.cols() != dim_b) throw ContractViolation("conditional_state: operator must act on B");
  const ComplexMatrix big = tensor_product(ComplexMatrix::Identity(dim_a, dim_a), pi);
  const ComplexMatrix m = partial_trace(big * rho_ab.matrix(), Subsystem::B, dim_a, dim_b);
  ConditionalState out;
  out.probability = m.trace().real();
  if (out.probability < kEmptyBranch) {
    out.empty = true;
    out.state = DensityMatrix::maximally_mixed(dim_a);
    return out;
  }
  out.state = DensityMatrix(0.5 * (m + m.adjoint()) / out.probability);
  return out;
}

double measured_correlation(const DensityMatrix& rho_ab, const std::vector<ComplexMatrix>& effects,
                            Eigen::Index dim_a, Eigen::Index dim_b) {
  double cond = 0.0;
  for (const auto& e : effects) {
    const auto cs = conditional_state(rho_ab, e, dim_a, dim_b);
    if (!cs.empty) cond += cs.probability * von_neumann_entropy(cs.state);
  }
  return von_neumann_entropy(partial_trace(rho_ab, Subsystem::B, dim_a, dim_b)) - cond;
}

DensityMatrix swap_subsystems(const DensityMatrix& rho, Eigen::Index dim_a, Eigen::Index dim_b) {
  if (rho.dim() != dim_a * dim_b) throw ContractViolation("swap_subsystems: dimension mismatch");
  const Eigen::Index n = rho.dim();
  ComplexMatrix out(n, n);
  const auto sw = [&](Eigen::Index i) { return (i % dim_b) * dim_a + i / dim_b; };
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(sw(i), sw(j)) = rho(i, j);
  return DensityMatrix(out);
}

ClassicalCorrelation classical_correlation(const DensityMatrix& rho_in, Eigen::Index dim_a, Eigen::Index dim_b,
                                           const DiscordConfig& cfg) {
  cfg.validate();
  if (rho_in.dim() != dim_a * dim_b) throw ContractViolation("classical_correlation: dimension mismatch");
  if (dim_b < 2) throw ContractViolation("classical_correlation: measured side needs dimension >= 2");
  DensityMatrix rho = rho_in;
  Eigen::Index da = dim_a, db = dim_b;
  if (cfg.measurement_side == Subsystem::A) {
    rho = swap_subsystems(rho_in, dim_a, dim_b);
    std::swap(da, db);
  }
  const CorrelationObjective obj(rho, da, db);

  const bool povm = cfg.mode == MeasurementMode::povm;
  const Eigen::Index y = povm ? cfg.povm_outcomes : db;
  const int n = static_cast<int>(povm ? db * y : db);
  const auto evaluate = [&](const ComplexMatrix& u) {
    return povm ? obj.value(povm_from_dilation(u, db, y)) : obj.value_basis(u);
  };
  const auto neg = [&](const double* x) { return -evaluate(unitary_from_raw(n, x)); };

  std::vector<double> values;
  std::vector<ComplexMatrix> optima;
  for (int r = 0; r < cfg.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    std::vector<double> x = sample_cue_angles(n, rng).x0;
    const double v = -simplex_minimise(neg, x, cfg.polish_max_iter, cfg.polish_tol);
    values.push_back(v);
    optima.push_back(unitary_from_raw(n, x.data()));
  }
  // Computational basis as one extra candidate: exact for classical states.
  if (!povm) {
    values.push_back(obj.value_basis(ComplexMatrix::Identity(db, db)));
    optima.push_back(ComplexMatrix::Identity(db, db));
  }
  // Projective measurements are POVMs too: the best basis, padded with zero
  // effects, is one more candidate.
  std::vector<ComplexMatrix> padded;
  if (povm && y >= db) {
    DiscordConfig pc = cfg;
    pc.mode = MeasurementMode::projective;
    pc.measurement_side = Subsystem::B;
    const auto proj = classical_correlation(rho, da, db, pc);
    for (Eigen::Index a = 0; a < y; ++a)
      padded.push_back(a < db ? proj.basis.projector(a) : ComplexMatrix::Zero(db, db));
    values.push_back(obj.value(padded));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;

  ClassicalCorrelation out;
  out.value = std::max(0.0, values[best]);
  for (int r = 0; r < cfg.restarts; ++r)
    if (values[best] - values[r] <= cfg.polish_tol) ++out.restarts_within_tol;
  if (povm) {
    out.povm = Povm(best < optima.size() ? povm_from_dilation(optima[best], db, y) : padded);
    out.basis = MeasurementBasis(ComplexMatrix::Identity(db, db));
  } else {
    out.basis = MeasurementBasis(optima[best]);
  }
  return out;
}

DiscordResult quantum_discord(const DensityMatrix& rho_ab, Eigen::Index dim_a, Eigen::Index dim_b,
                              const DiscordConfig& cfg) {
  const auto cc = classical_correlation(rho_ab, dim_a, dim_b, cfg);
  DiscordResult r;
  r.mutual_information = mutual_information(rho_ab, dim_a, dim_b);
  r.classical_correlation = std::min(cc.value, r.mutual_information);
  r.discord = r.mutual_information - r.classical_correlation;
  r.optimal_basis = cc.basis;
  r.optimal_povm = cc.povm;
  r.restarts_within_tol = cc.restarts_within_tol;
  return r;
}

double rel_entropy_coherence(const DensityMatrix& rho, const std::optional<ComplexMatrix>& reference) {
  ComplexMatrix m = rho.matrix();
  if (reference) m = reference->adjoint() * m * *reference;
  const RealVector diag = m.diagonal().real();
  return std::max(0.0, entropy_of_spectrum(diag) - von_neumann_entropy(rho));
}

double l1_coherence(const DensityMatrix& rho, const std::optional<ComplexMatrix>& reference) {
  ComplexMatrix m = rho.matrix();
  if (reference) m = reference->adjoint() * m * *reference;
  return m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
}

double skew_information(const DensityMatrix& rho, const ComplexMatrix& k) {
  if (k.rows() != rho.dim() || k.cols() != rho.dim()) throw ContractViolation("skew_information: dimension mismatch");
  if (hermiticity_defect(k) > kHermitianTol) throw ContractViolation("skew_information: observable must be Hermitian");
  const ComplexMatrix c = commutator(matrix_sqrt_psd(rho), k);
  return std::max(0.0, -0.5 * (c * c).trace().real());
}

double variance(const DensityMatrix& rho, const ComplexMatrix& k) {
  const double mean = (rho.matrix() * k).trace().real();
  return (rho.matrix() * k * k).trace().real() - mean * mean;
}

ComplexMatrix local_observable(const ComplexMatrix& k, Subsystem side) {
  const ComplexMatrix id = ComplexMatrix::Identity(k.rows(), k.cols());
  return side == Subsystem::B ? tensor_product(id, k) : tensor_product(k, id);
}

FingerprintKind fingerprint_kind_for(ModelKind model) {
  return model == ModelKind::XXZ ? FingerprintKind::sz_populations : FingerprintKind::spin_lengths;
}

std::vector<double> basis_fingerprint(const MeasurementBasis& basis, FingerprintKind kind) {
  const ComplexMatrix& u = basis.vectors();
  if (u.rows() != 3) throw ContractViolation("basis_fingerprint: spin-1 bases only");
  std::vector<double> out;
  if (kind == FingerprintKind::sz_populations) {
    // column-major |<m|u_k>|^2
    for (Eigen::Index k = 0; k < 3; ++k)
      for (Eigen::Index m = 0; m < 3; ++m) out.push_back(std::norm(u(m, k)));
    return out;
  }
  const auto s = spin1_operators();
  for (Eigen::Index k = 0; k < 3; ++k) {
    const ComplexVector v = u.col(k);
    const double x = (v.adjoint() * s.sx * v)(0).real();
    const double y = (v.adjoint() * s.sy * v)(0).real();
    const double z = (v.adjoint() * s.sz * v)(0).real();
    out.push_back(std::sqrt(x * x + y * y + z * z));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double fingerprint_distance(const std::vector<double>& a, const std::vector<double>& b, FingerprintKind kind) {
  if (a.size() != b.size() || a.empty()) throw ContractViolation("fingerprint_distance: size mismatch");
  if (kind == FingerprintKind::spin_lengths) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
  }
  // Minimum over column permutations and the spin flip m -> -m of the largest
  // Bhattacharyya angle between matched population columns.
  std::array<int, 3> perm{0, 1, 2};
  double best = std::numeric_limits<double>::infinity();
  do {
    for (int flip = 0; flip < 2; ++flip) {
      double worst = 0.0;
      for (int k = 0; k < 3; ++k) {
        double overlap = 0.0;
        for (int m = 0; m < 3; ++m) {
          const int mb = flip ? 2 - m : m;
          overlap += std::sqrt(std::max(0.0, a[k * 3 + m]) * std::max(0.0, b[perm[k] * 3 + mb]));
        }
        worst = std::max(worst, std::acos(std::clamp(overlap, -1.0, 1.0)));
      }
      best = std::min(best, worst);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace spinq
