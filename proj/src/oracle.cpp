#include "spinq/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include <gsl/gsl_multimin.h>

#include "spinq/lanczos.hpp"

namespace spinq {

namespace {

struct SparseEntry {
  int to;
  double value;
};

class ChainOperator {
 public:
  ChainOperator(const ModelSpec& spec, int n, std::optional<int> sector) : n_(n) {
    const ComplexMatrix h = bond_operator(spec);
    if (h.imag().cwiseAbs().maxCoeff() > 1e-13) throw ContractViolation("ED: bond must be real");
    for (int p = 0; p < 9; ++p)
      for (int q = 0; q < 9; ++q)
        if (std::abs(h(q, p).real()) > 1e-15) columns_[p].push_back({q, h(q, p).real()});

    pow3_.assign(n + 1, 1);
    for (int i = 1; i <= n; ++i) pow3_[i] = pow3_[i - 1] * 3;
    const std::int64_t full = pow3_[n];
    lookup_.assign(static_cast<std::size_t>(full), -1);
    std::vector<int> digits(n, 0);
    int mag = n;  // all digits 0 means all m = +1
    for (std::int64_t c = 0; c < full; ++c) {
      if (!sector || mag == *sector) {
        lookup_[c] = static_cast<std::int32_t>(codes_.size());
        codes_.push_back(c);
      }
      // increment base-3 counter, last site fastest
      for (int i = n - 1; i >= 0; --i) {
        if (digits[i] < 2) {
          ++digits[i];
          --mag;
          break;
        }
        digits[i] = 0;
        mag += 2;
      }
    }
    if (codes_.empty()) throw ContractViolation("ED: requested S^z sector is empty");
  }

  Eigen::Index dim() const { return static_cast<Eigen::Index>(codes_.size()); }
  std::int64_t full_dim() const { return pow3_[n_]; }
  std::int64_t code(Eigen::Index i) const { return codes_[i]; }

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.setZero(dim());
    for (Eigen::Index b = 0; b < dim(); ++b) {
      const double xb = x(b);
      if (xb == 0.0) continue;
      const std::int64_t c = codes_[b];
      for (int i = 0; i + 1 < n_; ++i) {
        const std::int64_t wl = pow3_[n_ - 1 - i], wr = pow3_[n_ - 2 - i];
        const int dl = static_cast<int>((c / wl) % 3), dr = static_cast<int>((c / wr) % 3);
        const std::int64_t base = c - dl * wl - dr * wr;
        for (const auto& e : columns_[dl * 3 + dr]) {
          const std::int64_t nc = base + (e.to / 3) * wl + (e.to % 3) * wr;
          y(lookup_[nc]) += e.value * xb;
        }
      }
    }
  }

 private:
  int n_;
  std::vector<std::int64_t> pow3_;
  std::vector<std::int32_t> lookup_;
  std::vector<std::int64_t> codes_;
  std::array<std::vector<SparseEntry>, 9> columns_;
};

int krylov_for(Eigen::Index dim) {
  const double budget = 6e8 / (8.0 * static_cast<double>(dim));
  return static_cast<int>(std::clamp(budget, 20.0, 100.0));
}

}  // namespace

EdResult ed_ground_state(const ModelSpec& spec, int n_sites, std::optional<double> target_sz,
                         const EdOptions& opts) {
  if (n_sites < 2) throw ContractViolation("ED: need at least two sites");
  if (n_sites > kMaxEdSites) throw ContractViolation("ED: refusing more than 14 sites (memory guard)");
  std::optional<int> sector;
  if (target_sz) {
    const double r = std::round(*target_sz);
    if (std::abs(r - *target_sz) > 1e-9) throw ContractViolation("ED: target S^z must be an integer");
    sector = static_cast<int>(r);
  }
  const ChainOperator h(spec, n_sites, sector);
  LanczosOptions lo;
  lo.tol = opts.tol;
  lo.max_iter = opts.max_iter;
  lo.krylov_dim = krylov_for(h.dim());
  lo.seed = opts.seed;
  const auto apply = [&h](const Eigen::VectorXd& x, Eigen::VectorXd& y) { h.apply(x, y); };

  EdResult res;
  res.n_sites = n_sites;
  LanczosResult gs;
  if (h.dim() <= 400) {
    // Small spaces: dense diagonalisation is cheaper and exact.
    Eigen::MatrixXd dense(h.dim(), h.dim());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(h.dim()), col;
    for (Eigen::Index i = 0; i < h.dim(); ++i) {
      e(i) = 1.0;
      h.apply(e, col);
      dense.col(i) = col;
      e(i) = 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    gs.value = es.eigenvalues()(0);
    gs.vector = es.eigenvectors().col(0);
    if (h.dim() > 1) res.gap = es.eigenvalues()(1) - es.eigenvalues()(0);
  } else {
    gs = lanczos_ground_state(apply, h.dim(), lo);
    if (opts.compute_gap) {
      const Eigen::VectorXd v0 = gs.vector;
      const auto deflated = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        Eigen::VectorXd xp = x - v0 * v0.dot(x);
        h.apply(xp, y);
        y -= v0 * v0.dot(y);
      };
      LanczosOptions lo2 = lo;
      lo2.seed = opts.seed + 1;
      Eigen::VectorXd start = random_unit_vector(h.dim(), lo2.seed);
      start -= v0 * v0.dot(start);
      const auto ex = lanczos_ground_state(deflated, h.dim(), lo2, start);
      res.gap = ex.value - gs.value;
    }
  }
  Eigen::VectorXd hv;
  h.apply(gs.vector, hv);
  res.residual = (hv - gs.value * gs.vector).norm();
  res.energy = gs.value;
  if (res.gap) res.degeneracy_flag = *res.gap < std::max(1e-10, 10.0 * opts.tol);

  res.ground_vector = ComplexVector::Zero(h.full_dim());
  for (Eigen::Index i = 0; i < h.dim(); ++i) res.ground_vector(h.code(i)) = gs.vector(i);
  return res;
}

DensityMatrix rdm_from_vector(const ComplexVector& v, int n_sites, const std::vector<int>& sites) {
  if (n_sites < 1 || n_sites > kMaxEdSites) throw ContractViolation("rdm_from_vector: bad site count");
  if (sites.empty() || sites.size() > 4) throw ContractViolation("rdm_from_vector: 1 to 4 sites supported");
  std::vector<bool> seen(n_sites, false);
  for (int s : sites) {
    if (s < 0 || s >= n_sites || seen[s]) throw ContractViolation("rdm_from_vector: sites must be distinct and in range");
    seen[s] = true;
  }
  std::vector<std::int64_t> pow3(n_sites + 1, 1);
  for (int i = 1; i <= n_sites; ++i) pow3[i] = 3 * pow3[i - 1];
  if (v.size() != pow3[n_sites]) throw ContractViolation("rdm_from_vector: vector length is not 3^N");
  std::vector<int> rest;
  for (int i = 0; i < n_sites; ++i)
    if (!seen[i]) rest.push_back(i);

  const Eigen::Index dsub = pow3[sites.size()];
  const Eigen::Index drest = pow3[rest.size()];
  ComplexMatrix psi(dsub, drest);
  for (std::int64_t c = 0; c < pow3[n_sites]; ++c) {
    Eigen::Index a = 0, r = 0;
    for (int s : sites) a = a * 3 + (c / pow3[n_sites - 1 - s]) % 3;
    for (int s : rest) r = r * 3 + (c / pow3[n_sites - 1 - s]) % 3;
    psi(a, r) = v(c);
  }
  const double norm2 = v.squaredNorm();
  if (!(norm2 > 0)) throw ContractViolation("rdm_from_vector: zero vector");
  ComplexMatrix rho = psi * psi.adjoint() / norm2;
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

namespace {

ComplexMatrix haar_qr(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phases so the distribution is exactly Haar.
  for (int j = 0; j < n; ++j) {
    const Complex d = r(j, j);
    q.col(j) *= d / std::abs(d);
  }
  return q;
}

ComplexMatrix exp_i_hermitian(const double* p) {
  // 9 real parameters -> Hermitian 3x3
  ComplexMatrix h(3, 3);
  h(0, 0) = p[0];
  h(1, 1) = p[1];
  h(2, 2) = p[2];
  h(0, 1) = Complex(p[3], p[4]);
  h(0, 2) = Complex(p[5], p[6]);
  h(1, 2) = Complex(p[7], p[8]);
  h(1, 0) = std::conj(h(0, 1));
  h(2, 0) = std::conj(h(0, 2));
  h(2, 1) = std::conj(h(1, 2));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  ComplexVector phase(3);
  for (int i = 0; i < 3; ++i) phase(i) = std::polar(1.0, es.eigenvalues()(i));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

struct PolishData {
  const DensityMatrix* rho;
  ComplexMatrix base;
};

double polish_objective(const gsl_vector* x, void* params) {
  const auto* d = static_cast<const PolishData*>(params);
  const ComplexMatrix u = d->base * exp_i_hermitian(x->data);
  return -measured_information(*d->rho, u);
}

double polish(const DensityMatrix& rho, const ComplexMatrix& start, int iters, double start_value) {
  PolishData data{&rho, start};
  gsl_multimin_function f{&polish_objective, 9, &data};
  gsl_vector* x = gsl_vector_calloc(9);
  gsl_vector* step = gsl_vector_alloc(9);
  gsl_vector_set_all(step, 0.2);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 9);
  gsl_multimin_fminimizer_set(s, &f, x, step);
  for (int it = 0; it < iters; ++it) {
    if (gsl_multimin_fminimizer_iterate(s)) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-9) == GSL_SUCCESS) break;
  }
  const double best = std::max(start_value, -gsl_multimin_fminimizer_minimum(s));
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return best;
}

}  // namespace

ComplexMatrix haar_unitary_qr(int n, std::uint64_t seed) {
  if (n < 1) throw ContractViolation("haar_unitary_qr: n must be positive");
  std::mt19937_64 rng(seed);
  return haar_qr(n, rng);
}

double measured_information(const DensityMatrix& rho_ab, const ComplexMatrix& u) {
  if (rho_ab.dim() != 9 || u.rows() != 3 || u.cols() != 3)
    throw ContractViolation("measured_information: two-qutrit state and 3x3 basis expected");
  const ComplexMatrix& rho = rho_ab.matrix();
  const ComplexMatrix id = ComplexMatrix::Identity(3, 3);
  double conditional = 0.0;
  for (int k = 0; k < 3; ++k) {
    const ComplexMatrix pk = u.col(k) * u.col(k).adjoint();
    const ComplexMatrix big = tensor_product(id, pk);
    const ComplexMatrix post = big * rho * big;
    const double p = post.trace().real();
    if (p < 1e-14) continue;
    const ComplexMatrix cond = partial_trace(post, Subsystem::B, 3, 3) / p;
    conditional += p * entropy_of_spectrum(eigvals_hermitian(0.5 * (cond + cond.adjoint())));
  }
  const ComplexMatrix rho_a = partial_trace(rho, Subsystem::B, 3, 3);
  return entropy_of_spectrum(eigvals_hermitian(rho_a)) - conditional;
}

double brute_force_discord(const DensityMatrix& rho_ab, const BruteForceOptions& opts) {
  if (rho_ab.dim() != 9) throw ContractViolation("brute_force_discord: two-qutrit state expected");
  if (opts.samples < 1) throw ContractViolation("brute_force_discord: need at least one sample");
  std::mt19937_64 rng(opts.seed);
  std::vector<std::pair<double, int>> scored;
  std::vector<ComplexMatrix> bases;
  scored.reserve(opts.samples);
  bases.reserve(opts.samples);
  for (int i = 0; i < opts.samples; ++i) {
    bases.push_back(haar_qr(3, rng));
    scored.emplace_back(measured_information(rho_ab, bases.back()), i);
  }
  const int keep = std::min<int>(opts.polish, opts.samples);
  std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  double best = scored.front().first;
  for (int i = 0; i < keep; ++i)
    best = std::max(best, polish(rho_ab, bases[scored[i].second], opts.polish_iters, scored[i].first));

  const double s_a = von_neumann_entropy(partial_trace(rho_ab, Subsystem::B, 3, 3));
  const double s_b = von_neumann_entropy(partial_trace(rho_ab, Subsystem::A, 3, 3));
  const double mutual = s_a + s_b - von_neumann_entropy(rho_ab);
  return mutual - best;
}

}  // namespace spinq
