#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spinq/measures.hpp"
#include "spinq/oracle.hpp"
#include "support.hpp"

using namespace spinq;
using namespace spinq::testing;

namespace {

const double kLog3 = std::log2(3.0);

DensityMatrix basis_state(int dim, int k) {
  ComplexVector v = ComplexVector::Zero(dim);
  v(k) = 1.0;
  return DensityMatrix::from_pure(v);
}

DensityMatrix uniform_superposition() { return DensityMatrix::from_pure(ComplexVector::Ones(3)); }

// sum_k p_k rho_k ⊗ |k><k| with random rho_k on A and a random basis on B.
DensityMatrix classical_quantum(std::mt19937_64& rng) {
  const ComplexMatrix u = sample_cue(3, rng);
  std::uniform_real_distribution<double> uni(0.1, 1.0);
  std::vector<double> p(3);
  double s = 0.0;
  for (auto& x : p) s += (x = uni(rng));
  ComplexMatrix r = ComplexMatrix::Zero(9, 9);
  for (int k = 0; k < 3; ++k)
    r += (p[k] / s) * tensor_product(random_density(3, 2, rng).matrix(), u.col(k) * u.col(k).adjoint());
  return DensityMatrix(r);
}

}  // namespace

TEST_CASE("mutual information examples") {
  std::mt19937_64 rng(1);
  const auto product = DensityMatrix(tensor_product(random_density(3, 3, rng).matrix(), random_density(3, 3, rng).matrix()));
  CHECK(std::abs(mutual_information(product, 3, 3)) < 1e-10);
  CHECK(mutual_information(maximally_entangled_qutrits(), 3, 3) == doctest::Approx(2 * kLog3).epsilon(1e-12));
  CHECK(mutual_information(classically_correlated_qutrits(), 3, 3) == doctest::Approx(kLog3).epsilon(1e-12));
  for (int k = 0; k < 10; ++k) CHECK(mutual_information(random_density(9, 5, rng), 3, 3) >= -1e-9);
}

TEST_CASE("conditional states") {
  ComplexMatrix p0 = ComplexMatrix::Zero(3, 3);
  p0(0, 0) = 1.0;
  const auto c = conditional_state(basis_state(9, 0), p0, 3, 3);
  CHECK(c.probability == doctest::Approx(1.0));
  CHECK(std::abs(c.state(0, 0) - 1.0) < 1e-14);

  for (int k = 0; k < 3; ++k) {
    ComplexMatrix pk = ComplexMatrix::Zero(3, 3);
    pk(k, k) = 1.0;
    const auto ck = conditional_state(maximally_entangled_qutrits(), pk, 3, 3);
    CHECK(ck.probability == doctest::Approx(1.0 / 3.0));
    CHECK(std::abs(ck.state(k, k) - 1.0) < 1e-12);
  }

  ComplexMatrix p2 = ComplexMatrix::Zero(3, 3);
  p2(2, 2) = 1.0;
  const auto empty = conditional_state(basis_state(9, 0), p2, 3, 3);
  CHECK(empty.empty);
  CHECK(empty.probability < 1e-14);

  std::mt19937_64 rng(2);
  const auto rho = random_density(9, 9, rng);
  const auto b = basis_from_unitary(sample_cue(3, rng));
  double total = 0.0;
  for (const auto& pi : b.projectors()) total += conditional_state(rho, pi, 3, 3).probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("classical correlation examples") {
  CHECK(classical_correlation(classically_correlated_qutrits(), 3, 3).value == doctest::Approx(kLog3).epsilon(1e-6));
  std::mt19937_64 rng(3);
  const auto product = DensityMatrix(tensor_product(random_density(3, 3, rng).matrix(), random_density(3, 3, rng).matrix()));
  CHECK(std::abs(classical_correlation(product, 3, 3).value) < 1e-9);
  CHECK(std::abs(classical_correlation(maximally_entangled_qutrits(), 3, 3).value - kLog3) < 1e-3);
}

TEST_CASE("discord examples and identities") {
  std::mt19937_64 rng(4);
  const auto product = DensityMatrix(tensor_product(random_density(3, 3, rng).matrix(), random_density(3, 3, rng).matrix()));
  CHECK(std::abs(quantum_discord(product, 3, 3).discord) < 1e-6);
  CHECK(std::abs(quantum_discord(maximally_entangled_qutrits(), 3, 3).discord - kLog3) < 1e-3);

  for (int k = 0; k < 5; ++k) {
    const auto rho = random_density(9, 1 + k * 2, rng);
    const auto r = quantum_discord(rho, 3, 3);
    CHECK(std::abs(r.discord + r.classical_correlation - r.mutual_information) < 1e-9);
    CHECK(r.discord >= -1e-9);
    CHECK(r.discord <= r.mutual_information + 1e-9);
    CHECK(r.restarts_within_tol >= 1);
  }
}

TEST_CASE("discord matches the brute-force oracle") {
  std::mt19937_64 rng(5);
  BruteForceOptions bf;
  bf.samples = 3000;
  for (int k = 0; k < 4; ++k) {
    const auto rho = random_density(9, 2 + k, rng);
    CHECK(std::abs(quantum_discord(rho, 3, 3).discord - brute_force_discord(rho, bf)) < 1e-3);
  }
}

TEST_CASE("pure states: discord equals the entanglement entropy") {
  std::mt19937_64 rng(6);
  DiscordConfig cfg;
  cfg.restarts = 10;
  for (int k = 0; k < 10; ++k) {
    const auto rho = DensityMatrix::from_pure(random_pure(9, rng));
    const double sa = von_neumann_entropy(partial_trace(rho, Subsystem::B, 3, 3));
    CHECK(std::abs(quantum_discord(rho, 3, 3, cfg).discord - sa) < 1e-3);
  }
}

TEST_CASE("classical-quantum states have zero discord") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 5; ++k) CHECK(quantum_discord(classical_quantum(rng), 3, 3).discord < 1e-6);
}

TEST_CASE("more restarts never raise the discord") {
  std::mt19937_64 rng(8);
  const auto rho = random_density(9, 3, rng);
  DiscordConfig cfg;
  double last = 1e9;
  for (int r : {1, 2, 5, 20}) {
    cfg.restarts = r;
    const double d = quantum_discord(rho, 3, 3, cfg).discord;
    CHECK(d <= last + 1e-12);
    last = d;
  }
}

TEST_CASE("dual-seed agreement") {
  std::mt19937_64 rng(10);
  const auto rho = random_density(9, 4, rng);
  DiscordConfig a, b;
  b.seed = 99;
  CHECK(std::abs(quantum_discord(rho, 3, 3, a).discord - quantum_discord(rho, 3, 3, b).discord) < 1e-4);
}

TEST_CASE("side A measurement equals side B on the swapped state") {
  std::mt19937_64 rng(11);
  const auto rho = random_density(9, 3, rng);
  DiscordConfig a;
  a.measurement_side = Subsystem::A;
  const double da = quantum_discord(rho, 3, 3, a).discord;
  const double db = quantum_discord(swap_subsystems(rho, 3, 3), 3, 3).discord;
  CHECK(da == doctest::Approx(db).epsilon(1e-6));
}

TEST_CASE("POVM mode is at least as good as projective") {
  std::mt19937_64 rng(12);
  const auto rho = random_density(9, 2, rng);
  DiscordConfig proj, povm;
  povm.mode = MeasurementMode::povm;
  povm.restarts = 8;
  const auto rp = quantum_discord(rho, 3, 3, proj);
  const auto rv = quantum_discord(rho, 3, 3, povm);
  REQUIRE(rv.optimal_povm);
  CHECK(rv.optimal_povm->outcomes() == 4);
  CHECK(rv.classical_correlation >= rp.classical_correlation - 1e-4);
  CHECK(std::abs(rv.discord + rv.classical_correlation - rv.mutual_information) < 1e-9);
}

TEST_CASE("discord configuration contracts") {
  DiscordConfig c;
  c.restarts = 0;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c = {};
  c.polish_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
}

TEST_CASE("coherence examples") {
  std::mt19937_64 rng(13);
  ComplexMatrix diag = ComplexMatrix::Zero(3, 3);
  diag(0, 0) = 0.2;
  diag(1, 1) = 0.5;
  diag(2, 2) = 0.3;
  CHECK(rel_entropy_coherence(DensityMatrix(diag)) == doctest::Approx(0.0));
  CHECK(l1_coherence(DensityMatrix(diag)) == 0.0);
  CHECK(rel_entropy_coherence(uniform_superposition()) == doctest::Approx(kLog3).epsilon(1e-12));
  CHECK(l1_coherence(uniform_superposition()) == doctest::Approx(2.0).epsilon(1e-12));

  for (int k = 0; k < 10; ++k) {
    const auto rho = random_density(3, 1 + k % 3, rng);
    RealVector d = rho.matrix().diagonal().real();
    const double sd = -(d.array() * d.array().log()).sum() / std::log(2.0);
    CHECK(rel_entropy_coherence(rho) == doctest::Approx(sd - von_neumann_entropy(rho)).epsilon(1e-10));
    CHECK(rel_entropy_coherence(rho) >= -1e-12);

    ComplexMatrix phase = ComplexMatrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i) phase(i, i) = std::polar(1.0, 1.7 * i + k);
    const DensityMatrix rotated(phase * rho.matrix() * phase.adjoint());
    CHECK(std::abs(l1_coherence(rotated) - l1_coherence(rho)) < 1e-10);
    CHECK(std::abs(rel_entropy_coherence(rotated) - rel_entropy_coherence(rho)) < 1e-10);
  }

  // a rotated reference basis turns the uniform superposition incoherent
  ComplexMatrix f = ComplexMatrix::Zero(3, 3);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) f(j, k) = std::polar(1.0 / std::sqrt(3.0), 2 * std::numbers::pi * j * k / 3);
  CHECK(std::abs(l1_coherence(uniform_superposition(), f)) < 1e-12);
}

TEST_CASE("skew information") {
  const auto s = spin1_operators();
  CHECK(skew_information(basis_state(3, 0), s.sx) == doctest::Approx(0.5).epsilon(1e-12));
  std::mt19937_64 rng(14);
  ComplexMatrix diag = ComplexMatrix::Zero(3, 3);
  diag(0, 0) = 0.6;
  diag(2, 2) = 0.4;
  CHECK(std::abs(skew_information(DensityMatrix(diag), s.sz)) < 1e-14);

  for (int k = 0; k < 100; ++k) {
    const auto rho = random_density(3, 1 + k % 3, rng);
    const double c = skew_information(rho, s.sz);
    CHECK(c >= -1e-12);
    CHECK(c <= variance(rho, s.sz) + 1e-10);
  }
  for (int k = 0; k < 10; ++k) {
    const auto psi = DensityMatrix::from_pure(random_pure(3, rng));
    CHECK(std::abs(skew_information(psi, s.sx) - variance(psi, s.sx)) < 1e-10);
  }
  // nonzero commutator gives a positive value
  CHECK(skew_information(uniform_superposition(), s.sz) > 0.1);
}

TEST_CASE("local observables") {
  const auto s = spin1_operators();
  const ComplexMatrix zb = local_observable(s.sz, Subsystem::B);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) CHECK(zb(3 * a + b, 3 * a + b) == s.sz(b, b));
  const RealVector spec = eigvals_hermitian(local_observable(s.sx, Subsystem::A));
  for (int i = 0; i < 3; ++i) CHECK(spec(i) == doctest::Approx(-1.0));
  for (int i = 6; i < 9; ++i) CHECK(spec(i) == doctest::Approx(1.0));

  std::mt19937_64 rng(15);
  const auto ra = random_density(3, 2, rng), rb = random_density(3, 3, rng);
  const DensityMatrix prod(tensor_product(ra.matrix(), rb.matrix()));
  CHECK(skew_information(prod, local_observable(s.sx, Subsystem::B)) ==
        doctest::Approx(skew_information(rb, s.sx)).epsilon(1e-10));
  CHECK(skew_information(prod, local_observable(s.sz, Subsystem::A)) ==
        doctest::Approx(skew_information(ra, s.sz)).epsilon(1e-10));
}

TEST_CASE("basis fingerprints") {
  const auto id = basis_from_unitary(ComplexMatrix::Identity(3, 3));
  const auto fp = basis_fingerprint(id, FingerprintKind::sz_populations);
  // permuting columns and changing phases leaves the fingerprint distance at zero
  ComplexMatrix perm = ComplexMatrix::Zero(3, 3);
  perm(0, 2) = std::polar(1.0, 0.3);
  perm(1, 0) = std::polar(1.0, 1.1);
  perm(2, 1) = -1.0;
  const auto fp2 = basis_fingerprint(basis_from_unitary(perm), FingerprintKind::sz_populations);
  CHECK(fingerprint_distance(fp, fp2, FingerprintKind::sz_populations) < 1e-12);

  const auto fourier = [] {
    ComplexMatrix f(3, 3);
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) f(j, k) = std::polar(1.0 / std::sqrt(3.0), 2 * std::numbers::pi * j * k / 3);
    return f;
  }();
  const auto fpf = basis_fingerprint(basis_from_unitary(fourier), FingerprintKind::sz_populations);
  CHECK(fingerprint_distance(fp, fpf, FingerprintKind::sz_populations) > 0.5);

  // spin lengths are invariant under global spin rotations
  const auto s = spin1_operators();
  const auto expi = [](const ComplexMatrix& h, double t) {
    const auto e = eig_hermitian(h);
    ComplexVector ph(e.values.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::polar(1.0, t * e.values(i));
    return ComplexMatrix(e.vectors * ph.asDiagonal() * e.vectors.adjoint());
  };
  const ComplexMatrix rot = expi(s.sy, 0.7) * expi(s.sz, 0.4);
  const auto l1 = basis_fingerprint(id, FingerprintKind::spin_lengths);
  const auto l2 = basis_fingerprint(basis_from_unitary(rot), FingerprintKind::spin_lengths);
  CHECK(fingerprint_distance(l1, l2, FingerprintKind::spin_lengths) < 1e-10);
  CHECK(fingerprint_distance(l1, basis_fingerprint(basis_from_unitary(fourier), FingerprintKind::spin_lengths),
                             FingerprintKind::spin_lengths) > 0.5);
  CHECK(fingerprint_kind_for(ModelKind::XXZ) == FingerprintKind::sz_populations);
  CHECK(fingerprint_kind_for(ModelKind::BLBQ) == FingerprintKind::spin_lengths);
}
