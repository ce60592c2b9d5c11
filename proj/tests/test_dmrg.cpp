#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "spinq/checkpoint.hpp"
#include "spinq/dmrg.hpp"
#include "spinq/lanczos.hpp"
#include "spinq/oracle.hpp"
#include "support.hpp"

using namespace spinq;
using namespace spinq::testing;

namespace {

// Lowest energy of the dense open chain restricted to total Sz = 0.
double dense_sector_energy(const ModelSpec& spec, int n) {
  const ComplexMatrix h = open_chain_hamiltonian(spec, n);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < h.rows(); ++c) {
    int mag = 0;
    Eigen::Index r = c;
    for (int i = 0; i < n; ++i, r /= 3) mag += 1 - static_cast<int>(r % 3);
    if (mag == 0) keep.push_back(c);
  }
  ComplexMatrix sub(keep.size(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = 0; j < keep.size(); ++j) sub(i, j) = h(keep[i], keep[j]);
  return eigvals_hermitian(sub)(0);
}

// Bulk two-site state of the AKLT valence-bond solid from its 2x2 matrix
// product representation.
Eigen::MatrixXd aklt_two_site_rdm() {
  std::array<Eigen::Matrix2d, 3> a;
  a[0] << 0, std::sqrt(2.0 / 3.0), 0, 0;       // m = +1
  a[1] << -std::sqrt(1.0 / 3.0), 0, 0, std::sqrt(1.0 / 3.0);  // m = 0
  a[2] << 0, 0, -std::sqrt(2.0 / 3.0), 0;      // m = -1
  Eigen::MatrixXd rho(9, 9);
  for (int s1 = 0; s1 < 3; ++s1)
    for (int s2 = 0; s2 < 3; ++s2)
      for (int t1 = 0; t1 < 3; ++t1)
        for (int t2 = 0; t2 < 3; ++t2)
          rho(3 * s1 + s2, 3 * t1 + t2) = 0.5 * (a[s1] * a[s2] * (a[t1] * a[t2]).transpose()).trace();
  return rho;
}

}  // namespace

TEST_CASE("truncate examples") {
  const auto t = truncate(DensityMatrix::maximally_mixed(4), 2);
  CHECK(t.truncation_error == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.projector.cols() == 2);

  ComplexVector v = ComplexVector::Zero(4);
  v(2) = 1.0;
  const auto p = truncate(DensityMatrix::from_pure(v), 1);
  CHECK(p.truncation_error == 0.0);
  CHECK(std::abs(p.projector(2, 0)) == doctest::Approx(1.0));

  const auto all = truncate(DensityMatrix::maximally_mixed(3), 5);
  CHECK(all.truncation_error == 0.0);
  CHECK(all.projector.cols() == 3);
}

TEST_CASE("truncate keeps the largest weights (sort oracle)") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rho = random_density(12, 12, rng);
    const int m = 1 + trial % 11;
    const auto t = truncate(rho, m);
    RealVector w = eigvals_hermitian(rho.matrix());
    std::vector<double> sorted(w.data(), w.data() + w.size());
    std::sort(sorted.rbegin(), sorted.rend());
    double kept_expected = 0.0;
    for (int i = 0; i < m; ++i) kept_expected += sorted[i];
    CHECK(t.projector.cols() == m);
    const double kept = (t.projector.adjoint() * rho.matrix() * t.projector).trace().real();
    CHECK(kept == doctest::Approx(kept_expected).epsilon(1e-10));
    CHECK(t.truncation_error == doctest::Approx(1.0 - kept_expected).epsilon(1e-10));
  }
}

TEST_CASE("degenerate multiplets at the cut") {
  // fits within 10%: keep the whole multiplet
  std::vector<double> w{0.5, 0.1, 0.1, 0.1};
  std::vector<double> big(12);
  for (int i = 0; i < 12; ++i) big[i] = 0.2 - 0.01 * i;
  big[10] = big[9];  // doublet straddles the cut at m = 10
  CHECK(select_kept_states(big, std::vector<int>(12, 0), 10).size() == 11);
  // overflow beyond 10% with states before it: drop the multiplet
  CHECK(select_kept_states(w, {0, 0, 0, 0}, 2).size() == 1);
  // nothing before it: fill m states in label order
  const auto kept = select_kept_states({0.25, 0.25, 0.25, 0.25}, {1, -1, 0, 2}, 2);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0] == 1);
  CHECK(kept[1] == 2);
}

TEST_CASE("first growth step equals dense diagonalisation of four sites") {
  for (const auto& spec : {ModelSpec::xxz(1.0), ModelSpec::xxz(-0.4), ModelSpec::blbq_pi(1.3)}) {
    const auto terms = decompose_bond(bond_operator(spec));
    const Block b = single_site_block(terms);
    DmrgConfig cfg;
    cfg.lanczos_tol = 1e-13;
    const auto g = grow_step(b, b, spec, cfg, 0);
    CHECK(g.superblock_energy == doctest::Approx(dense_sector_energy(spec, 4)).epsilon(1e-12));
    CHECK(g.truncation_error == 0.0);
    // ground vector lives in the target sector
    for (Eigen::Index i = 0; i < g.ground_vector.rows(); ++i)
      for (Eigen::Index j = 0; j < g.ground_vector.cols(); ++j)
        if (g.enlarged_sz[i] + g.enlarged_sz[j] != 0) CHECK(g.ground_vector(i, j) == 0.0);
    CHECK(std::abs(g.ground_vector.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("grow_step keeps block operators Hermitian") {
  const auto spec = ModelSpec::xxz(1.5);
  const auto terms = decompose_bond(bond_operator(spec));
  Block b = single_site_block(terms);
  DmrgConfig cfg;
  cfg.m = 20;
  for (int step = 0; step < 6; ++step) {
    const auto g = grow_step(b, b, spec, cfg, 0);
    const auto& h = g.left.hamiltonian;
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::is_sorted(g.left.sz.begin(), g.left.sz.end()));
    CHECK(g.left.dim() <= 22);
    CHECK(g.truncation_error >= 0.0);
    CHECK(g.truncation_error <= 1.0);
    b = g.left;
  }
  Block other = b;
  other.sz.back() += 1;
  CHECK_THROWS_AS(grow_step(b, other, spec, cfg, 0), ContractViolation);
}

TEST_CASE("DMRG without truncation matches exact diagonalisation") {
  for (const auto& spec : {ModelSpec::xxz(1.0), ModelSpec::blbq_pi(1.9)}) {
    for (int n : {4, 8}) {
      DmrgConfig cfg;
      cfg.m = 243;
      cfg.max_iterations = (n - 2) / 2;
      cfg.min_iterations = 1;
      cfg.lanczos_tol = 1e-12;
      const auto r = dmrg_ground_state(spec, cfg);
      CHECK(r.chain_length == n);
      EdOptions eo;
      eo.tol = 1e-12;
      const auto ed = ed_ground_state(spec, n, 0.0, eo);
      CHECK(std::abs(r.total_energy - ed.energy) < 1e-8);
      const auto rho = rdm_from_vector(ed.ground_vector, n, {n / 2 - 1, n / 2});
      CHECK(trace_distance(rho.matrix(), r.rho_two_site.matrix()) < 1e-6);
      for (double e : r.truncation_errors) CHECK(e == 0.0);
    }
  }
}

TEST_CASE("truncation error is zero while the enlarged block fits") {
  DmrgConfig cfg;
  cfg.m = 100;
  cfg.max_iterations = 6;
  cfg.min_iterations = 6;
  const auto r = dmrg_ground_state(ModelSpec::xxz(1.0), cfg);
  // enlarged blocks of 9, 27 and 81 states fit into m = 100
  for (int i = 0; i < 3; ++i) CHECK(r.truncation_errors[i] == 0.0);
  CHECK(r.truncation_errors[3] > 0.0);
}

TEST_CASE("Heisenberg chain: energy, translation invariance and truncation band") {
  DmrgConfig cfg;
  cfg.m = 60;
  const auto r = dmrg_ground_state(ModelSpec::xxz(1.0), cfg);
  CHECK(r.converged);
  // known bulk value -1.401484038971
  CHECK(r.energy_per_site == doctest::Approx(-1.401484).epsilon(1e-5));
  const auto right = partial_trace(r.rho_two_site, Subsystem::A, 3, 3);
  CHECK((right.matrix() - r.rho_one_site.matrix()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(r.truncation_errors.back() >= 1e-12);
  CHECK(r.truncation_errors.back() <= 1e-5);
  // SU(2) symmetric single-site state
  CHECK((r.rho_one_site.matrix() - ComplexMatrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("variational monotonicity at a gapped point") {
  DmrgConfig cfg;
  cfg.m = 40;
  const auto r = dmrg_ground_state(ModelSpec::xxz(1.5), cfg);
  for (std::size_t i = 5; i + 1 < r.energies.size(); ++i) CHECK(r.energies[i + 1] <= r.energies[i] + 1e-9);
}

TEST_CASE("fully polarised ferromagnet") {
  DmrgConfig cfg;
  cfg.m = 20;
  cfg.target_sz_per_site = 1.0;
  const auto r = dmrg_ground_state(ModelSpec::xxz(-2.0), cfg);
  CHECK(r.energy_per_site == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(r.target_sz == r.chain_length);
  CHECK(std::abs(r.rho_two_site(0, 0) - 1.0) < 1e-10);
  CHECK(von_neumann_entropy(r.rho_two_site) < 1e-9);
}

TEST_CASE("AKLT point reproduces the valence-bond-solid two-site state") {
  DmrgConfig cfg;
  cfg.m = 30;
  const auto r = dmrg_ground_state(ModelSpec::blbq(std::atan(1.0 / 3.0)), cfg);
  CHECK(r.converged);
  CHECK(r.energy_per_site == doctest::Approx(-2.0 / 3.0 * std::cos(std::atan(1.0 / 3.0))).epsilon(1e-9));
  const RealVector dmrg = eigvals_hermitian(r.rho_two_site.matrix());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(aklt_two_site_rdm());
  CHECK((dmrg - es.eigenvalues()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((r.rho_two_site.matrix().real() - aklt_two_site_rdm()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("configuration contracts") {
  DmrgConfig cfg;
  cfg.m = 2;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.lanczos_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.target_sz = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
}

TEST_CASE("checkpoints resume a run") {
  const auto dir = std::filesystem::temp_directory_path() / "spinq_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "run.ckpt").string();
  std::filesystem::remove(path);
  const auto spec = ModelSpec::xxz(1.5);
  DmrgConfig cfg;
  cfg.m = 30;
  cfg.min_iterations = 12;
  cfg.max_iterations = 12;
  const auto full = dmrg_ground_state(spec, cfg);

  cfg.checkpoint_path = path;
  cfg.max_iterations = 7;
  dmrg_ground_state(spec, cfg);
  const auto ck = load_checkpoint(path, spec);
  REQUIRE(ck);
  CHECK(ck->iteration == 7);
  CHECK(ck->energies.size() == 7);
  cfg.max_iterations = 12;
  const auto resumed = dmrg_ground_state(spec, cfg);
  CHECK(resumed.iterations_used == 12);
  CHECK(resumed.total_energy == doctest::Approx(full.total_energy).epsilon(1e-9));
  CHECK_THROWS(load_checkpoint(path, ModelSpec::xxz(1.0)));
  std::filesystem::remove_all(dir);
}

TEST_CASE("Lanczos finds the lowest eigenpair") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(200, 200);
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200; ++j) a(i, j) = g(rng);
  const Eigen::MatrixXd h = a + a.transpose();
  const auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = h * x; };
  LanczosOptions o;
  o.tol = 1e-10;
  o.krylov_dim = 30;
  const auto r = lanczos_ground_state(apply, 200, o);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  CHECK(r.value == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-12));
  CHECK(r.residual < 1e-10);

  // start on an excited eigenvector: breakdown, then a random restart
  const Eigen::VectorXd excited = es.eigenvectors().col(5);
  const auto r2 = lanczos_ground_state(apply, 200, o, excited);
  CHECK(r2.value == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-12));

  o.max_iter = 3;
  CHECK_THROWS_AS(lanczos_ground_state(apply, 200, o), LanczosError);
}
