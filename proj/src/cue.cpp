#include "spinq/cue.hpp"

#include <cmath>
#include <numbers>

namespace spinq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_unitary(const ComplexMatrix& u, double tol, const char* who) {
  if (u.rows() != u.cols() || u.rows() == 0) throw ContractViolation(std::string(who) + ": square matrix expected");
  const ComplexMatrix id = ComplexMatrix::Identity(u.rows(), u.cols());
  if ((u.adjoint() * u - id).cwiseAbs().maxCoeff() > tol)
    throw ContractViolation(std::string(who) + ": matrix is not unitary");
}

// Hermitian square root of a PSD matrix, negative roundoff clamped.
ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
  const RealVector s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

EulerAngleVector EulerAngleVector::zeros(int n) {
  if (n < 2) throw ContractViolation("Euler angles need dimension >= 2");
  return {n, std::vector<double>(length(n), 0.0)};
}

void EulerAngleVector::validate() const {
  if (n < 2) throw ContractViolation("Euler angles need dimension >= 2");
  if (x0.size() != length(n)) throw ContractViolation("Euler angle vector has the wrong length");
  const auto in_cycle = [](double v) { return v >= 0.0 && v < kTwoPi; };
  if (!in_cycle(alpha())) throw ContractViolation("alpha outside [0, 2pi)");
  for (int k = 1; k < n; ++k)
    if (!in_cycle(chi(k))) throw ContractViolation("chi outside [0, 2pi)");
  for (int j = 0; j < n - 1; ++j)
    for (int k = 1; k < n; ++k) {
      const double p = phi(j, k);
      if (!(p >= 0.0 && p <= std::numbers::pi / 2)) throw ContractViolation("phi outside [0, pi/2]");
      if (!in_cycle(psi(j, k))) throw ContractViolation("psi outside [0, 2pi)");
    }
}

ComplexMatrix unitary_from_angles(const EulerAngleVector& a) {
  a.validate();
  const int n = a.n;
  ComplexMatrix u = ComplexMatrix::Identity(n, n) * std::polar(1.0, a.alpha());
  for (int k = 1; k < n; ++k) {
    for (int j = k - 1; j >= 0; --j) {
      // Right-multiply by R(j, k): only columns p, q change.
      const int p = n - 2 - j, q = n - 1 - j;
      const double c = std::cos(a.phi(j, k)), s = std::sin(a.phi(j, k));
      const double chi = j == 0 ? a.chi(k) : 0.0;
      const Complex epp = c * std::polar(1.0, a.psi(j, k));
      const Complex epq = s * std::polar(1.0, chi);
      const Complex eqp = -s * std::polar(1.0, -chi);
      const Complex eqq = c * std::polar(1.0, -a.psi(j, k));
      const ComplexVector cp = u.col(p), cq = u.col(q);
      u.col(p) = cp * epp + cq * eqp;
      u.col(q) = cp * epq + cq * eqq;
    }
  }
  return u;
}

EulerAngleVector sample_cue_angles(int n, std::mt19937_64& rng) {
  auto a = EulerAngleVector::zeros(n);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  a.x0[0] = angle(rng);
  for (int k = 1; k < n; ++k) a.x0[k] = angle(rng);
  for (int j = 0; j < n - 1; ++j)
    for (int k = 1; k < n; ++k) {
      a.phi(j, k) = std::asin(std::pow(unit(rng), 1.0 / (2.0 * j + 2.0)));
      a.psi(j, k) = angle(rng);
    }
  return a;
}

ComplexMatrix sample_cue(int n, std::mt19937_64& rng) {
  if (n < 2) throw ContractViolation("sample_cue: n must be at least 2");
  return unitary_from_angles(sample_cue_angles(n, rng));
}

ComplexMatrix sample_cue(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_cue(n, rng);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  // splitmix64 of root advanced by index golden-ratio steps
  std::uint64_t z = root + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

MeasurementBasis::MeasurementBasis(ComplexMatrix u) : vectors_(std::move(u)) {
  check_unitary(vectors_, 1e-10, "basis_from_unitary");
}

std::vector<ComplexMatrix> MeasurementBasis::projectors() const {
  std::vector<ComplexMatrix> out;
  for (Eigen::Index k = 0; k < dim(); ++k) out.push_back(projector(k));
  return out;
}

MeasurementBasis basis_from_unitary(const ComplexMatrix& u) { return MeasurementBasis(u); }

Povm::Povm(std::vector<ComplexMatrix> elements) : elements_(std::move(elements)) {
  if (elements_.empty()) throw ContractViolation("POVM needs at least one element");
  const Eigen::Index d = elements_.front().rows();
  ComplexMatrix sum = ComplexMatrix::Zero(d, d);
  for (auto& e : elements_) {
    if (e.rows() != d || e.cols() != d) throw ContractViolation("POVM elements must share one square shape");
    if (hermiticity_defect(e) > kHermitianTol) throw ContractViolation("POVM element is not Hermitian");
    e = 0.5 * (e + e.adjoint()).eval();
    if (eigvals_hermitian(e)(0) < -kPsdTol) throw PsdViolation("POVM element is not positive semidefinite");
    sum += e;
  }
  if ((sum - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
    throw ContractViolation("POVM elements do not sum to the identity");
}

Povm random_povm(int dim, int outcomes, std::mt19937_64& rng) {
  if (dim < 1 || outcomes < 1) throw ContractViolation("random_povm: bad shape");
  std::normal_distribution<double> g;
  std::vector<ComplexMatrix> parts;
  ComplexMatrix sum = ComplexMatrix::Zero(dim, dim);
  for (int a = 0; a < outcomes; ++a) {
    ComplexMatrix x(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) x(i, j) = Complex(g(rng), g(rng));
    parts.push_back(x * x.adjoint());
    sum += parts.back();
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (sum + sum.adjoint()));
  const RealVector inv = es.eigenvalues().cwiseSqrt().cwiseInverse();
  const ComplexMatrix s = es.eigenvectors() * inv.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  for (auto& p : parts) p = s * p * s;
  return Povm(std::move(parts));
}

ComplexMatrix NaimarkDilation::embed(const ComplexMatrix& rho) const {
  return tensor_product(rho, ancilla_u * ancilla_u.adjoint());
}

ComplexMatrix complete_unitary(const ComplexMatrix& partial, std::uint64_t seed) {
  const Eigen::Index n = partial.rows(), k = partial.cols();
  if (k > n) throw ContractViolation("complete_unitary: more columns than rows");
  if ((partial.adjoint() * partial - ComplexMatrix::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-9)
    throw ContractViolation("complete_unitary: columns are not orthonormal");
  ComplexMatrix out(n, n);
  out.leftCols(k) = partial;
  if (k == n) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  ComplexMatrix z(n, n - k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n - k; ++j) z(i, j) = Complex(g(rng), g(rng));
  for (int pass = 0; pass < 2; ++pass) z -= partial * (partial.adjoint() * z);
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n - k);
  for (int pass = 0; pass < 2; ++pass) q -= partial * (partial.adjoint() * q);
  // re-orthonormalise the complement after the projection
  Eigen::HouseholderQR<ComplexMatrix> qr2(q);
  const ComplexMatrix r = qr2.matrixQR().topRows(n - k).triangularView<Eigen::Upper>();
  if (r.diagonal().cwiseAbs().minCoeff() < 1e-8)
    throw std::runtime_error("complete_unitary: rank deficiency in the completion");
  out.rightCols(n - k) = qr2.householderQ() * ComplexMatrix::Identity(n, n - k);
  return out;
}

NaimarkDilation naimark_dilation(const Povm& p) {
  const Eigen::Index x = p.dim();
  const Eigen::Index y = static_cast<Eigen::Index>(p.outcomes());
  if (x == 0) throw ContractViolation("naimark_dilation: empty POVM");
  NaimarkDilation d;
  d.x = x;
  d.y = y;
  d.ancilla_u = ComplexVector::Zero(y);
  d.ancilla_u(0) = 1.0;
  d.isometry_a = ComplexMatrix::Zero(x * y, x);
  for (Eigen::Index a = 0; a < y; ++a) {
    const ComplexMatrix root = psd_sqrt(p.elements()[a]);
    for (Eigen::Index i = 0; i < x; ++i)
      for (Eigen::Index j = 0; j < x; ++j) d.isometry_a(i * y + a, j) = root(i, j);
  }
  if ((d.isometry_a.adjoint() * d.isometry_a - ComplexMatrix::Identity(x, x)).cwiseAbs().maxCoeff() > 1e-9)
    throw std::runtime_error("naimark_dilation: A is not an isometry");

  // Columns i*y of U are fixed by U V = A; the rest complete the unitary.
  const ComplexMatrix completed = complete_unitary(d.isometry_a, 0x5eed);
  d.unitary_u.resize(x * y, x * y);
  Eigen::Index free_col = x;
  for (Eigen::Index c = 0; c < x * y; ++c) {
    if (c % y == 0)
      d.unitary_u.col(c) = completed.col(c / y);
    else
      d.unitary_u.col(c) = completed.col(free_col++);
  }
  for (Eigen::Index a = 0; a < y; ++a) {
    ComplexMatrix proj = ComplexMatrix::Zero(x * y, x * y);
    for (Eigen::Index i = 0; i < x; ++i) proj(i * y + a, i * y + a) = 1.0;
    d.projectors_q.push_back(d.unitary_u.adjoint() * proj * d.unitary_u);
  }
  return d;
}

}  // namespace spinq
