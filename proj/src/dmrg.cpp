#include "spinq/dmrg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "spinq/checkpoint.hpp"
#include "spinq/lanczos.hpp"

namespace spinq {

namespace {

struct Sectors {
  std::vector<int> charge;
  std::vector<Eigen::Index> offset;
  std::vector<Eigen::Index> size;

  int find(int q) const {
    const auto it = std::lower_bound(charge.begin(), charge.end(), q);
    if (it == charge.end() || *it != q) return -1;
    return static_cast<int>(it - charge.begin());
  }
  int count() const { return static_cast<int>(charge.size()); }
};

Sectors make_sectors(const std::vector<int>& sz) {
  Sectors s;
  for (std::size_t i = 0; i < sz.size(); ++i) {
    if (i > 0 && sz[i] < sz[i - 1]) throw std::logic_error("sector labels must be sorted");
    if (s.charge.empty() || s.charge.back() != sz[i]) {
      s.charge.push_back(sz[i]);
      s.offset.push_back(static_cast<Eigen::Index>(i));
      s.size.push_back(0);
    }
    ++s.size.back();
  }
  return s;
}

struct SiteEntry {
  Eigen::Index dst, src;
  double value;
};

// Block ⊗ site with the product basis re-sorted by S^z.
struct Enlarged {
  Eigen::Index block_dim = 0;
  std::vector<int> sz;
  std::vector<Eigen::Index> position;  // product index l*3+s -> sorted index
  Sectors sectors;
  Eigen::MatrixXd hamiltonian;
  std::vector<std::vector<SiteEntry>> left_site_ops;   // I ⊗ a_k
  std::vector<std::vector<SiteEntry>> right_site_ops;  // I ⊗ b_k

  Eigen::Index pos(Eigen::Index l, int s) const { return position[l * 3 + s]; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(sz.size()); }
};

Enlarged enlarge(const Block& block, const std::vector<BondTerm>& terms) {
  Enlarged e;
  const Eigen::Index d = block.dim();
  const Eigen::Index n = 3 * d;
  e.block_dim = d;
  std::vector<int> product_sz(n);
  for (Eigen::Index l = 0; l < d; ++l)
    for (int s = 0; s < 3; ++s) product_sz[l * 3 + s] = block.sz[l] + site_magnetization(s);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return product_sz[a] < product_sz[b]; });
  e.position.assign(n, 0);
  e.sz.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e.position[order[i]] = i;
    e.sz[i] = product_sz[order[i]];
  }
  e.sectors = make_sectors(e.sz);

  // H = H_block ⊗ I + sum_k O_k ⊗ b_k
  e.hamiltonian = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < 3; ++s)
    for (int t = 0; t < 3; ++t) {
      Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(d, d);
      bool any = false;
      if (s == t && block.hamiltonian.size() > 0) {
        coupling += block.hamiltonian;
        any = true;
      }
      for (std::size_t k = 0; k < terms.size(); ++k) {
        const double b = terms[k].right(s, t);
        if (b == 0.0) continue;
        coupling += b * block.edge_operators[k];
        any = true;
      }
      if (!any) continue;
      for (Eigen::Index l2 = 0; l2 < d; ++l2)
        for (Eigen::Index l1 = 0; l1 < d; ++l1) {
          const double v = coupling(l1, l2);
          if (v != 0.0) e.hamiltonian(e.pos(l1, s), e.pos(l2, t)) = v;
        }
    }

  e.left_site_ops.resize(terms.size());
  e.right_site_ops.resize(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k)
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < 3; ++t) {
        const double a = terms[k].left(s, t);
        const double b = terms[k].right(s, t);
        for (Eigen::Index l = 0; l < d; ++l) {
          if (a != 0.0) e.left_site_ops[k].push_back({e.pos(l, s), e.pos(l, t), a});
          if (b != 0.0) e.right_site_ops[k].push_back({e.pos(l, s), e.pos(l, t), b});
        }
      }
  return e;
}

// Superblock (enlarged ⊗ mirrored enlarged) restricted to one S^z sector.
// The state is stored as a list of dense pieces psi[left sector q, right sector t-q].
class Superblock {
 public:
  Superblock(const Enlarged& e, const std::vector<BondTerm>& terms, int target)
      : e_(e), target_(target) {
    const auto& sec = e.sectors;
    piece_of_left_.assign(sec.count(), -1);
    for (int i = 0; i < sec.count(); ++i) {
      const int j = sec.find(target - sec.charge[i]);
      if (j < 0) continue;
      piece_of_left_[i] = static_cast<int>(pieces_.size());
      pieces_.push_back({i, j, dim_, sec.size[i], sec.size[j]});
      dim_ += sec.size[i] * sec.size[j];
    }
    if (dim_ == 0) throw ContractViolation("target S^z sector is empty for this superblock");

    std::vector<int> sector_of(e.dim());
    for (int i = 0; i < sec.count(); ++i)
      for (Eigen::Index k = 0; k < sec.size[i]; ++k) sector_of[sec.offset[i] + k] = i;

    for (std::size_t k = 0; k < terms.size(); ++k) {
      for (const auto& p : pieces_) {
        CenterOp op;
        op.src_piece = piece_of_left_[p.left];
        int left_dst = -1, right_dst = -1;
        for (const auto& en : e.left_site_ops[k])
          if (sector_of[en.src] == p.left) {
            left_dst = sector_of[en.dst];
            op.left.push_back({en.dst - sec.offset[left_dst], en.src - sec.offset[p.left], en.value});
          }
        for (const auto& en : e.right_site_ops[k])
          if (sector_of[en.src] == p.right) {
            right_dst = sector_of[en.dst];
            op.right.push_back(
                {en.dst - sec.offset[right_dst], en.src - sec.offset[p.right], en.value});
          }
        if (op.left.empty() || op.right.empty()) continue;
        op.dst_piece = piece_of_left_[left_dst];
        if (op.dst_piece < 0 || pieces_[op.dst_piece].right != right_dst)
          throw std::logic_error("bond term breaks S^z conservation");
        op.scratch = Eigen::MatrixXd(pieces_[op.dst_piece].rows, p.cols);
        center_.push_back(std::move(op));
      }
    }
  }

  Eigen::Index dim() const { return dim_; }

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.setZero(dim_);
    const auto& h = e_.hamiltonian;
    const auto& sec = e_.sectors;
    for (const auto& p : pieces_) {
      Eigen::Map<const Eigen::MatrixXd> xp(x.data() + p.offset, p.rows, p.cols);
      Eigen::Map<Eigen::MatrixXd> yp(y.data() + p.offset, p.rows, p.cols);
      const Eigen::Index lo = sec.offset[p.left];
      const Eigen::Index ro = sec.offset[p.right];
      yp.noalias() += h.block(lo, lo, p.rows, p.rows) * xp;
      yp.noalias() += xp * h.block(ro, ro, p.cols, p.cols);
    }
    for (auto& op : center_) {
      const auto& src = pieces_[op.src_piece];
      const auto& dst = pieces_[op.dst_piece];
      Eigen::Map<const Eigen::MatrixXd> xp(x.data() + src.offset, src.rows, src.cols);
      Eigen::Map<Eigen::MatrixXd> yp(y.data() + dst.offset, dst.rows, dst.cols);
      op.scratch.setZero();
      for (const auto& l : op.left) op.scratch.row(l.dst) += l.value * xp.row(l.src);
      for (const auto& r : op.right) yp.col(r.dst) += r.value * op.scratch.col(r.src);
    }
  }

  Eigen::MatrixXd unpack(const Eigen::VectorXd& v) const {
    const auto& sec = e_.sectors;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(e_.dim(), e_.dim());
    for (const auto& p : pieces_)
      out.block(sec.offset[p.left], sec.offset[p.right], p.rows, p.cols) =
          Eigen::Map<const Eigen::MatrixXd>(v.data() + p.offset, p.rows, p.cols);
    return out;
  }

  Eigen::VectorXd pack(const Eigen::MatrixXd& m) const {
    const auto& sec = e_.sectors;
    Eigen::VectorXd v(dim_);
    for (const auto& p : pieces_)
      Eigen::Map<Eigen::MatrixXd>(v.data() + p.offset, p.rows, p.cols) =
          m.block(sec.offset[p.left], sec.offset[p.right], p.rows, p.cols);
    return v;
  }

  // Block density matrix averaged over the two mirrored halves, one dense
  // block per sector. For a reflection-symmetric state both halves agree; for a
  // state with broken edge symmetry the average keeps the states each mirrored
  // block will need.
  std::vector<Eigen::MatrixXd> block_rdm(const Eigen::VectorXd& v) const {
    const auto& sec = e_.sectors;
    std::vector<Eigen::MatrixXd> out(sec.count());
    for (int i = 0; i < sec.count(); ++i) out[i] = Eigen::MatrixXd::Zero(sec.size[i], sec.size[i]);
    for (const auto& p : pieces_) {
      Eigen::Map<const Eigen::MatrixXd> xp(v.data() + p.offset, p.rows, p.cols);
      out[p.left].noalias() += 0.5 * xp * xp.transpose();
      out[p.right].noalias() += 0.5 * xp.transpose() * xp;
    }
    return out;
  }

 private:
  struct Piece {
    int left, right;
    Eigen::Index offset, rows, cols;
  };
  struct Local {
    Eigen::Index dst, src;
    double value;
  };
  struct CenterOp {
    int src_piece = -1, dst_piece = -1;
    std::vector<Local> left, right;
    Eigen::MatrixXd scratch;
  };

  const Enlarged& e_;
  int target_;
  std::vector<Piece> pieces_;
  std::vector<int> piece_of_left_;
  std::vector<CenterOp> center_;
  Eigen::Index dim_ = 0;
};

using Matrix9d = Eigen::Matrix<double, 9, 9>;

Matrix9d central_two_site_rdm(const Enlarged& e, const Eigen::MatrixXd& psi) {
  const Eigen::Index d = e.block_dim;
  std::array<Eigen::MatrixXd, 9> phi;
  for (int s1 = 0; s1 < 3; ++s1)
    for (int s2 = 0; s2 < 3; ++s2) {
      auto& f = phi[s1 * 3 + s2];
      f.resize(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        const Eigen::Index col = e.pos(r, s2);
        for (Eigen::Index l = 0; l < d; ++l) f(l, r) = psi(e.pos(l, s1), col);
      }
    }
  Matrix9d rho;
  for (int a = 0; a < 9; ++a)
    for (int b = a; b < 9; ++b) rho(a, b) = rho(b, a) = phi[a].cwiseProduct(phi[b]).sum();
  return rho;
}

Matrix9d symmetrized(const Matrix9d& rho, bool spin_flip) {
  Matrix9d swap = Matrix9d::Zero();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) swap(b * 3 + a, a * 3 + b) = 1.0;
  Matrix9d out = 0.5 * (rho + swap * rho * swap.transpose());
  if (spin_flip) {
    // exp(i pi S^x) on both sites, up to a global phase
    Eigen::Matrix3d f = Eigen::Matrix3d::Zero();
    f(0, 2) = f(1, 1) = f(2, 0) = 1.0;
    Matrix9d ff;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) ff.block<3, 3>(3 * i, 3 * j) = f(i, j) * f;
    out = 0.5 * (out + ff * out * ff.transpose());
  }
  return out;
}

DensityMatrix to_density(const Matrix9d& rho) {
  Matrix9d r = 0.5 * (rho + rho.transpose());
  r /= r.trace();
  return DensityMatrix(r.cast<Complex>());
}

struct StepData {
  double energy = 0.0;
  Eigen::MatrixXd psi;          // dense, enlarged ⊗ enlarged
  Eigen::MatrixXd projector;    // enlarged -> kept
  std::vector<double> kept_weights;
  Block next;
  double truncation_error = 0.0;
  Matrix9d rho_two;
  int lanczos_iterations = 0;
};

// Quantities of the previous step needed to translate its ground state.
struct Predictor {
  bool ready = false;
  Enlarged prev_enlarged;            // enlarged structure of step n
  Eigen::MatrixXd x;                 // psi_n^T U_n
  Eigen::MatrixXd w;                 // U_n C_n
  Eigen::MatrixXd center;            // C_n = U_n^T psi_n U_n
  Eigen::MatrixXd center_prev;       // C_{n-1}
  bool have_prev = false;
};

Eigen::MatrixXd predict(const Predictor& p, const Enlarged& next) {
  const Eigen::Index dn = p.center_prev.rows();
  const Eigen::Index dk = p.x.cols();
  // Pseudo-inverse of C_{n-1}.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(p.center_prev, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index r = 0; r < sv.size(); ++r)
    if (sv(r) > 1e-6 * sv(0)) inv(r) = 1.0 / sv(r);
  const Eigen::MatrixXd m = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  Eigen::MatrixXd guess = Eigen::MatrixXd::Zero(next.dim(), next.dim());
  const auto& pe = p.prev_enlarged;
  for (int s1 = 0; s1 < 3; ++s1) {
    Eigen::MatrixXd xs(dn, dk);
    for (Eigen::Index r = 0; r < dn; ++r) xs.row(r) = p.x.row(pe.pos(r, s1));
    const Eigen::MatrixXd left = xs.transpose() * m;
    for (int s2 = 0; s2 < 3; ++s2) {
      Eigen::MatrixXd ws(dn, dk);
      for (Eigen::Index r = 0; r < dn; ++r) ws.row(r) = p.w.row(pe.pos(r, s2));
      const Eigen::MatrixXd g = left * ws;
      for (Eigen::Index c = 0; c < dk; ++c) {
        const Eigen::Index col = next.pos(c, s2);
        for (Eigen::Index a = 0; a < dk; ++a) guess(next.pos(a, s1), col) = g(a, c);
      }
    }
  }
  return guess;
}

StepData run_step(const Block& block, const std::vector<BondTerm>& terms, int m, int target,
                  const LanczosOptions& lopts, const Predictor* predictor,
                  Enlarged* enlarged_out = nullptr) {
  Enlarged e = enlarge(block, terms);
  Superblock sb(e, terms, target);

  std::optional<Eigen::VectorXd> start;
  if (predictor && predictor->ready && predictor->have_prev) {
    Eigen::VectorXd g = sb.pack(predict(*predictor, e));
    const double norm = g.norm();
    if (norm > 0 && std::isfinite(norm)) {
      g /= norm;
      // A small random admixture keeps every symmetry sector reachable.
      g += 1e-4 * random_unit_vector(g.size(), lopts.seed ^ 0x9e3779b97f4a7c15ULL);
      start = g;
    }
  }

  const auto lz = lanczos_ground_state(
      [&sb](const Eigen::VectorXd& x, Eigen::VectorXd& y) { sb.apply(x, y); }, sb.dim(), lopts,
      start);

  StepData out;
  out.energy = lz.value;
  out.lanczos_iterations = lz.iterations;
  out.psi = sb.unpack(lz.vector);

  // Block density matrix, diagonalised sector by sector.
  const auto rdm = sb.block_rdm(lz.vector);
  const auto& sec = e.sectors;
  std::vector<double> weights;
  std::vector<int> labels;
  std::vector<std::pair<int, Eigen::Index>> origin;  // (sector, column)
  std::vector<Eigen::MatrixXd> vecs(sec.count());
  for (int i = 0; i < sec.count(); ++i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rdm[i]);
    vecs[i] = es.eigenvectors();
    for (Eigen::Index k = sec.size[i] - 1; k >= 0; --k) {
      weights.push_back(std::max(0.0, es.eigenvalues()(k)));
      labels.push_back(sec.charge[i]);
      origin.emplace_back(i, k);
    }
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  auto kept = select_kept_states(weights, labels, m);
  // New basis ordered by sector, then by descending weight (selection order).
  std::stable_sort(kept.begin(), kept.end(),
                   [&](int a, int b) { return labels[a] < labels[b]; });
  const Eigen::Index dk = static_cast<Eigen::Index>(kept.size());
  out.projector = Eigen::MatrixXd::Zero(e.dim(), dk);
  double kept_sum = 0.0;
  out.next.sites = block.sites + 1;
  out.next.sz.resize(dk);
  out.kept_weights.resize(dk);
  for (Eigen::Index c = 0; c < dk; ++c) {
    const auto [i, k] = origin[kept[c]];
    out.projector.block(sec.offset[i], c, sec.size[i], 1) = vecs[i].col(k);
    out.next.sz[c] = labels[kept[c]];
    out.kept_weights[c] = weights[kept[c]];
    kept_sum += weights[kept[c]];
  }
  out.truncation_error = std::clamp(1.0 - kept_sum / total, 0.0, 1.0);
  if (static_cast<Eigen::Index>(kept.size()) == e.dim()) out.truncation_error = 0.0;

  const auto& p = out.projector;
  out.next.hamiltonian = p.transpose() * e.hamiltonian * p;
  out.next.hamiltonian = 0.5 * (out.next.hamiltonian + out.next.hamiltonian.transpose()).eval();
  out.next.edge_operators.resize(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    Eigen::MatrixXd op_p = Eigen::MatrixXd::Zero(e.dim(), dk);
    for (const auto& en : e.left_site_ops[k]) op_p.row(en.dst) += en.value * p.row(en.src);
    out.next.edge_operators[k] = p.transpose() * op_p;
  }
  out.rho_two = central_two_site_rdm(e, out.psi);
  if (enlarged_out) *enlarged_out = std::move(e);
  return out;
}

void check_mirror_symmetric(const ComplexMatrix& bond) {
  Eigen::MatrixXcd swapped(9, 9);
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b) swapped((a % 3) * 3 + a / 3, (b % 3) * 3 + b / 3) = bond(a, b);
  if ((swapped - bond).cwiseAbs().maxCoeff() > 1e-12)
    throw ContractViolation("bond operator is not symmetric under site exchange; mirrored blocks need it");
}

int integer_sector(double value) {
  const double r = std::round(value);
  if (std::abs(r - value) > 1e-9) throw ContractViolation("target S^z must be an integer for spin-1 chains");
  return static_cast<int>(r);
}

int target_for(const DmrgConfig& cfg, int length) {
  if (cfg.target_sz_per_site) {
    const double t = *cfg.target_sz_per_site * length;
    return static_cast<int>(std::round(t));
  }
  return integer_sector(cfg.target_sz);
}

LanczosOptions lanczos_options(const DmrgConfig& cfg, int step) {
  LanczosOptions o;
  o.tol = cfg.lanczos_tol;
  o.relative = true;
  o.max_iter = cfg.lanczos_max_iter;
  o.krylov_dim = cfg.lanczos_krylov;
  o.seed = cfg.seed * 0x100000001b3ULL + static_cast<std::uint64_t>(step);
  return o;
}

}  // namespace

void DmrgConfig::validate() const {
  if (m < 3) throw ContractViolation("DMRG: m must be at least 3");
  if (max_iterations < 1) throw ContractViolation("DMRG: max_iterations must be positive");
  if (!(lanczos_tol > 0) || !(energy_convergence_tol > 0) || !(auto_m_target > 0))
    throw ContractViolation("DMRG: tolerances must be positive");
  if (lanczos_max_iter < 1 || lanczos_krylov < 2) throw ContractViolation("DMRG: bad Lanczos limits");
  if (convergence_window < 1) throw ContractViolation("DMRG: convergence window must be positive");
  if (!target_sz_per_site) integer_sector(target_sz);
  if (target_sz_per_site && std::abs(*target_sz_per_site) > 1.0)
    throw ContractViolation("DMRG: magnetisation per site must lie in [-1, 1]");
}

Block single_site_block(const std::vector<BondTerm>& terms) {
  // Sorted ascending in S^z: block state b is site state 2 - b.
  Block b;
  b.sites = 1;
  b.sz = {-1, 0, 1};
  b.hamiltonian = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& t : terms) {
    Eigen::MatrixXd op(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) op(i, j) = t.left(2 - i, 2 - j);
    b.edge_operators.push_back(op);
  }
  return b;
}

std::vector<int> select_kept_states(const std::vector<double>& weights, const std::vector<int>& labels,
                                    int m) {
  const int n = static_cast<int>(weights.size());
  if (static_cast<int>(labels.size()) != n) throw ContractViolation("labels and weights differ in size");
  if (m < 1) throw ContractViolation("must keep at least one state");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto by_label = [&](int a, int b) {
    return labels[a] != labels[b] ? labels[a] < labels[b] : a < b;
  };
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    return by_label(a, b);
  });
  if (n <= m) return order;

  const double wc = weights[order[m - 1]];
  const auto tied = [&](int idx) { return std::abs(weights[idx] - wc) <= 1e-6 * wc + 1e-13; };
  int first = m - 1, last = m - 1;
  while (first > 0 && tied(order[first - 1])) --first;
  while (last + 1 < n && tied(order[last + 1])) ++last;

  // Numerically empty weights are not a multiplet; dropping them would shrink
  // the block below what the next step needs.
  const bool empty = wc <= 1e-14 * weights[order[0]];
  int keep = m;
  if (empty) {
    std::sort(order.begin() + first, order.begin() + last + 1, by_label);
  } else if (last > m - 1) {
    const int whole = last + 1;
    if (whole <= static_cast<int>(std::floor(1.1 * m)))
      keep = whole;
    else if (first > 0)
      keep = first;
    else
      std::sort(order.begin() + first, order.begin() + last + 1, by_label);
  }
  order.resize(keep);
  return order;
}

Truncation truncate(const DensityMatrix& block_rdm, int m) {
  const auto eig = eig_hermitian(block_rdm.matrix());
  const Eigen::Index n = eig.values.size();
  std::vector<double> weights(n);
  for (Eigen::Index i = 0; i < n; ++i) weights[i] = std::max(0.0, eig.values(i));
  const std::vector<int> labels(n, 0);
  Truncation t;
  t.kept = select_kept_states(weights, labels, m);
  t.projector.resize(n, static_cast<Eigen::Index>(t.kept.size()));
  double kept = 0.0;
  for (std::size_t c = 0; c < t.kept.size(); ++c) {
    t.projector.col(static_cast<Eigen::Index>(c)) = eig.vectors.col(t.kept[c]);
    kept += weights[t.kept[c]];
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  t.truncation_error = static_cast<Eigen::Index>(t.kept.size()) == n
                           ? 0.0
                           : std::clamp(1.0 - kept / total, 0.0, 1.0);
  return t;
}

GrowStep grow_step(const Block& left, const Block& right, const ModelSpec& spec,
                   const DmrgConfig& cfg, int target_sz) {
  cfg.validate();
  if (left.sz != right.sz || left.hamiltonian.rows() != right.hamiltonian.rows() ||
      (left.hamiltonian - right.hamiltonian).cwiseAbs().maxCoeff() > 1e-8)
    throw ContractViolation("grow_step: right block must mirror the left block");
  const ComplexMatrix bond = bond_operator(spec);
  check_mirror_symmetric(bond);
  const auto terms = decompose_bond(bond);
  if (left.edge_operators.size() != terms.size())
    throw ContractViolation("grow_step: block was built for a different bond decomposition");

  Enlarged e;
  const StepData step = run_step(left, terms, cfg.m, target_sz, lanczos_options(cfg, left.sites),
                                 nullptr, &e);
  GrowStep g;
  g.left = step.next;
  g.right = step.next;
  g.superblock_energy = step.energy;
  g.ground_vector = step.psi;
  g.enlarged_sz = e.sz;
  g.truncation_error = step.truncation_error;
  g.rho_two_site = to_density(step.rho_two);
  return g;
}

DmrgResult dmrg_ground_state(const ModelSpec& spec, const DmrgConfig& cfg) {
  cfg.validate();
  const ComplexMatrix bond = bond_operator(spec);
  check_mirror_symmetric(bond);
  const auto terms = decompose_bond(bond);

  DmrgResult res;
  Block block = single_site_block(terms);
  int first_iteration = 1;
  int m = cfg.m;
  Predictor pred;
  std::optional<Matrix9d> rho_last, rho_prev, rho_even, rho_odd;
  double prev_energy = 0.0;
  double prev_per_site = 0.0;
  int quiet_steps = 0;

  if (!cfg.checkpoint_path.empty()) {
    if (auto ck = load_checkpoint(cfg.checkpoint_path, spec)) {
      block = ck->block;
      first_iteration = ck->iteration + 1;
      m = ck->m;
      prev_energy = ck->energies.empty() ? 0.0 : ck->energies.back();
      res.energies = ck->energies;
      res.truncation_errors = ck->truncation_errors;
      if (res.energies.size() >= 2)
        prev_per_site = 0.5 * (res.energies.back() - res.energies[res.energies.size() - 2]);
    }
  }

  for (int it = first_iteration; it <= cfg.max_iterations; ++it) {
    const int length = 2 * it + 2;
    const int target = target_for(cfg, length);
    Enlarged e;
    StepData step = run_step(block, terms, m, target, lanczos_options(cfg, it),
                             cfg.predict_wavefunction ? &pred : nullptr, &e);

    res.energies.push_back(step.energy);
    res.truncation_errors.push_back(step.truncation_error);
    res.total_energy = step.energy;
    res.chain_length = length;
    res.target_sz = target;
    res.iterations_used = it;
    res.energy_per_site_naive = step.energy / length;
    double per_site = res.energy_per_site_naive;
    if (res.energies.size() >= 2) per_site = 0.5 * (step.energy - prev_energy);
    res.energy_per_site = per_site;

    rho_prev = rho_last;
    rho_last = step.rho_two;
    (it % 2 == 0 ? rho_even : rho_odd) = step.rho_two;

    if (res.energies.size() >= 3 && std::abs(per_site - prev_per_site) < cfg.energy_convergence_tol)
      ++quiet_steps;
    else
      quiet_steps = 0;
    prev_energy = step.energy;
    prev_per_site = per_site;

    if (cfg.predict_wavefunction) {
      const Eigen::MatrixXd& u = step.projector;
      Eigen::MatrixXd center = u.transpose() * step.psi * u;
      if (pred.ready) {
        pred.center_prev = std::move(pred.center);
        pred.have_prev = true;
      }
      pred.x = step.psi.transpose() * u;
      pred.w = u * center;
      pred.center = std::move(center);
      pred.prev_enlarged = std::move(e);
      pred.ready = true;
    }

    if (cfg.auto_m && step.truncation_error > cfg.auto_m_target && m < cfg.m_max)
      m = std::min(cfg.m_max, m + 25);
    block = std::move(step.next);

    if (!cfg.checkpoint_path.empty()) {
      Checkpoint ck{spec.to_string(), it, m, block, res.energies, res.truncation_errors};
      save_checkpoint(cfg.checkpoint_path, ck);
    }

    const bool settled = quiet_steps >= cfg.convergence_window && it >= cfg.min_iterations;
    const bool parity_ok = (cfg.central_bond != CentralBond::even || it % 2 == 0) &&
                           (cfg.central_bond != CentralBond::odd || it % 2 == 1);
    if (settled && parity_ok) {
      res.converged = true;
      break;
    }
  }

  Matrix9d rho;
  switch (cfg.central_bond) {
    case CentralBond::last: rho = *rho_last; break;
    case CentralBond::average: rho = rho_prev ? Matrix9d(0.5 * (*rho_last + *rho_prev)) : *rho_last; break;
    case CentralBond::even: rho = rho_even ? *rho_even : *rho_last; break;
    case CentralBond::odd: rho = rho_odd ? *rho_odd : *rho_last; break;
  }
  if (cfg.symmetrize) rho = symmetrized(rho, res.target_sz == 0);
  res.rho_two_site = to_density(rho);
  res.rho_one_site = partial_trace(res.rho_two_site, Subsystem::B, 3, 3);
  res.final_m = m;
  return res;
}

}  // namespace spinq
