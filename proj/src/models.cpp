#include "spinq/models.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace spinq {

Spin1Algebra spin1_operators() {
  const double r = 1.0 / std::numbers::sqrt2;
  const Complex i{0.0, 1.0};
  Spin1Algebra s;
  s.sx = ComplexMatrix::Zero(3, 3);
  s.sx(0, 1) = s.sx(1, 0) = s.sx(1, 2) = s.sx(2, 1) = r;
  s.sy = ComplexMatrix::Zero(3, 3);
  s.sy(0, 1) = -i * r;
  s.sy(1, 0) = i * r;
  s.sy(1, 2) = -i * r;
  s.sy(2, 1) = i * r;
  s.sz = ComplexMatrix::Zero(3, 3);
  s.sz(0, 0) = 1.0;
  s.sz(2, 2) = -1.0;
  s.identity = ComplexMatrix::Identity(3, 3);
  return s;
}

ModelSpec ModelSpec::xxz(double delta) {
  if (!std::isfinite(delta)) throw ContractViolation("xxz: delta must be finite");
  return {ModelKind::XXZ, delta};
}

ModelSpec ModelSpec::blbq(double theta) {
  if (!std::isfinite(theta)) throw ContractViolation("blbq: theta must be finite");
  const double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta, two_pi);
  if (t < 0) t += two_pi;
  return {ModelKind::BLBQ, t};
}

ModelSpec ModelSpec::blbq_pi(double theta_over_pi) { return blbq(theta_over_pi * std::numbers::pi); }

double ModelSpec::delta() const {
  if (kind_ != ModelKind::XXZ) throw ContractViolation("delta is only defined for the XXZ model");
  return value_;
}

double ModelSpec::theta() const {
  if (kind_ != ModelKind::BLBQ) throw ContractViolation("theta is only defined for the BLBQ model");
  return value_;
}

double ModelSpec::parameter() const {
  return kind_ == ModelKind::XXZ ? value_ : value_ / std::numbers::pi;
}

std::string ModelSpec::to_string() const {
  std::ostringstream os;
  os.precision(12);
  if (kind_ == ModelKind::XXZ)
    os << "xxz:delta=" << value_;
  else
    os << "blbq:theta=" << value_ / std::numbers::pi;
  return os.str();
}

std::string_view model_kind_name(ModelKind kind) { return kind == ModelKind::XXZ ? "xxz" : "blbq"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "xxz" || name == "XXZ") return ModelKind::XXZ;
  if (name == "blbq" || name == "BLBQ") return ModelKind::BLBQ;
  throw ContractViolation("unknown model kind '" + std::string(name) + "'");
}

ModelSpec parse_model_spec(std::string_view text) {
  const auto colon = text.find(':');
  const auto eq = text.find('=');
  if (colon == std::string_view::npos || eq == std::string_view::npos || eq < colon)
    throw ContractViolation("model spec must look like xxz:delta=<x> or blbq:theta=<x>");
  const ModelKind kind = parse_model_kind(text.substr(0, colon));
  const auto key = text.substr(colon + 1, eq - colon - 1);
  const std::string value_text(text.substr(eq + 1));
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(value_text, &used);
    if (used != value_text.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ContractViolation("cannot parse model parameter '" + value_text + "'");
  }
  if (kind == ModelKind::XXZ) {
    if (key != "delta") throw ContractViolation("xxz expects the key 'delta'");
    return ModelSpec::xxz(value);
  }
  if (key != "theta") throw ContractViolation("blbq expects the key 'theta'");
  return ModelSpec::blbq_pi(value);
}

ComplexMatrix bond_operator(const ModelSpec& spec) {
  const auto s = spin1_operators();
  const ComplexMatrix xx = tensor_product(s.sx, s.sx);
  const ComplexMatrix yy = tensor_product(s.sy, s.sy);
  const ComplexMatrix zz = tensor_product(s.sz, s.sz);
  ComplexMatrix h;
  if (spec.kind() == ModelKind::XXZ) {
    h = xx + yy + spec.delta() * zz;
  } else {
    const ComplexMatrix dot = xx + yy + zz;
    h = std::cos(spec.theta()) * dot + std::sin(spec.theta()) * (dot * dot);
  }
  return 0.5 * (h + h.adjoint());
}

ComplexMatrix two_site_total(const ComplexMatrix& single) {
  const ComplexMatrix id = ComplexMatrix::Identity(single.rows(), single.cols());
  return tensor_product(single, id) + tensor_product(id, single);
}

std::vector<BondTerm> decompose_bond(const ComplexMatrix& bond) {
  if (bond.rows() != 9 || bond.cols() != 9) throw ContractViolation("bond operator must be 9x9");
  if (bond.imag().cwiseAbs().maxCoeff() > 1e-13)
    throw ContractViolation("bond operator is not real in the S^z basis");
  const Eigen::MatrixXd h = bond.real();
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());

  // Units |i><j| carry charge j - i.
  std::vector<BondTerm> terms;
  double used = 0.0;
  for (int q = -2; q <= 2; ++q) {
    std::vector<std::pair<int, int>> left_units, right_units;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (j - i == q) left_units.emplace_back(i, j);
        if (j - i == -q) right_units.emplace_back(i, j);
      }
    Eigen::MatrixXd coeff(left_units.size(), right_units.size());
    for (std::size_t l = 0; l < left_units.size(); ++l)
      for (std::size_t r = 0; r < right_units.size(); ++r) {
        const auto [i1, j1] = left_units[l];
        const auto [i2, j2] = right_units[r];
        coeff(l, r) = h(3 * i1 + i2, 3 * j1 + j2);
        used += coeff(l, r) * coeff(l, r);
      }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(coeff, Eigen::ComputeFullU | Eigen::ComputeFullV);
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
      const double sigma = svd.singularValues()(k);
      if (sigma <= 1e-12 * scale) continue;
      BondTerm t;
      t.charge = q;
      t.left.setZero();
      t.right.setZero();
      for (std::size_t l = 0; l < left_units.size(); ++l)
        t.left(left_units[l].first, left_units[l].second) = sigma * svd.matrixU()(l, k);
      for (std::size_t r = 0; r < right_units.size(); ++r)
        t.right(right_units[r].first, right_units[r].second) = svd.matrixV()(r, k);
      terms.push_back(t);
    }
  }
  if (std::abs(used - h.squaredNorm()) > 1e-10 * scale * scale)
    throw ContractViolation("bond operator does not conserve total S^z");
  return terms;
}

ComplexMatrix open_chain_hamiltonian(const ModelSpec& spec, int n_sites) {
  if (n_sites < 2) throw ContractViolation("open chain needs at least two sites");
  const ComplexMatrix h = bond_operator(spec);
  const Eigen::Index dim = static_cast<Eigen::Index>(std::pow(3, n_sites));
  ComplexMatrix total = ComplexMatrix::Zero(dim, dim);
  for (int i = 0; i + 1 < n_sites; ++i) {
    const auto left = static_cast<Eigen::Index>(std::pow(3, i));
    const auto right = static_cast<Eigen::Index>(std::pow(3, n_sites - i - 2));
    total += tensor_product(tensor_product(ComplexMatrix::Identity(left, left), h),
                            ComplexMatrix::Identity(right, right));
  }
  return total;
}

}  // namespace spinq
