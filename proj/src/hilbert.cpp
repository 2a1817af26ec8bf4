#include "bundlesim/hilbert.hpp"

#include "bundlesim/errors.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/core.h>

#include <cmath>

namespace bundlesim::hilbert {

std::size_t basis_dim(int n_emitters) {
  if (n_emitters < 0) throw RangeError(fmt::format("negative emitter count {}", n_emitters));
  if (n_emitters > kMaxEmitters) {
    throw CapacityError(fmt::format("{} emitters exceeds the cap of {} (3^{} basis states)",
                                    n_emitters, kMaxEmitters, kMaxEmitters));
  }
  std::size_t d = 1;
  for (int i = 0; i < n_emitters; ++i) d *= 3;
  return d;
}

std::size_t basis_index(std::span<const LevelIndex> levels) {
  basis_dim(static_cast<int>(levels.size()));
  std::size_t idx = 0;
  std::size_t place = 1;
  for (LevelIndex l : levels) {
    idx += static_cast<std::size_t>(level_value(l)) * place;
    place *= 3;
  }
  return idx;
}

std::vector<LevelIndex> decode_basis(std::size_t index, int n_emitters) {
  const std::size_t d = basis_dim(n_emitters);
  if (index >= d) throw RangeError(fmt::format("basis index {} out of range [0, {})", index, d));
  std::vector<LevelIndex> levels(static_cast<std::size_t>(n_emitters));
  for (auto& l : levels) {
    l = static_cast<LevelIndex>(index % 3);
    index /= 3;
  }
  return levels;
}

StateVector::StateVector(int n_emitters)
    : n_emitters_(n_emitters),
      amps_(DenseVector::Zero(static_cast<Eigen::Index>(basis_dim(n_emitters)))) {}

StateVector::StateVector(int n_emitters, DenseVector amplitudes)
    : n_emitters_(n_emitters), amps_(std::move(amplitudes)) {
  if (static_cast<std::size_t>(amps_.size()) != basis_dim(n_emitters)) {
    throw DimensionError(fmt::format("state of length {} does not match 3^{}", amps_.size(),
                                     n_emitters));
  }
}

StateVector StateVector::basis_state(std::span<const LevelIndex> levels) {
  StateVector s(static_cast<int>(levels.size()));
  s.amps_[static_cast<Eigen::Index>(basis_index(levels))] = 1.0;
  return s;
}

StateVector StateVector::ground(int n_emitters) {
  StateVector s(n_emitters);
  s.amps_[0] = 1.0;
  return s;
}

void StateVector::normalize() {
  const double n = amps_.norm();
  if (!(n > 0.0)) throw NumericalError("cannot normalize a zero state vector");
  amps_ /= n;
}

DensityMatrix::DensityMatrix(int n_emitters)
    : n_emitters_(n_emitters) {
  const auto d = static_cast<Eigen::Index>(basis_dim(n_emitters));
  rho_ = DenseMatrix::Zero(d, d);
}

DensityMatrix::DensityMatrix(int n_emitters, DenseMatrix elements)
    : n_emitters_(n_emitters), rho_(std::move(elements)) {
  const auto d = static_cast<Eigen::Index>(basis_dim(n_emitters));
  if (rho_.rows() != d || rho_.cols() != d) {
    throw DimensionError(fmt::format("density matrix {}x{} does not match 3^{}", rho_.rows(),
                                     rho_.cols(), n_emitters));
  }
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  return DensityMatrix(psi.n_emitters(), psi.amplitudes() * psi.amplitudes().adjoint());
}

double DensityMatrix::hermiticity_defect() const {
  return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (rho_ + rho_.adjoint()),
                                                Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityMatrix::population(std::size_t basis) const {
  const auto i = static_cast<Eigen::Index>(basis);
  return rho_(i, i).real();
}

OperatorMatrix::OperatorMatrix(SparseMatrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DimensionError("operator must be square");
  m_.makeCompressed();
}

OperatorMatrix OperatorMatrix::zero(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return OperatorMatrix(SparseMatrix(d, d));
}

OperatorMatrix OperatorMatrix::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  SparseMatrix m(d, d);
  m.setIdentity();
  return OperatorMatrix(std::move(m));
}

OperatorMatrix OperatorMatrix::projector(std::size_t dim, std::size_t basis) {
  const auto d = static_cast<Eigen::Index>(dim);
  SparseMatrix m(d, d);
  m.insert(static_cast<Eigen::Index>(basis), static_cast<Eigen::Index>(basis)) = 1.0;
  return OperatorMatrix(std::move(m));
}

OperatorMatrix OperatorMatrix::projector(const StateVector& psi) {
  const auto& v = psi.amplitudes();
  const auto d = v.size();
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (v[i] == cplx{}) continue;
    for (Eigen::Index k = 0; k < d; ++k) {
      if (v[k] == cplx{}) continue;
      trip.emplace_back(i, k, v[i] * std::conj(v[k]));
    }
  }
  SparseMatrix m(d, d);
  m.setFromTriplets(trip.begin(), trip.end());
  return OperatorMatrix(std::move(m));
}

OperatorMatrix OperatorMatrix::adjoint() const { return OperatorMatrix(SparseMatrix(m_.adjoint())); }

double OperatorMatrix::hermiticity_defect() const {
  SparseMatrix diff = m_ - SparseMatrix(m_.adjoint());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

namespace {
void require_same_dim(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError(fmt::format("operator dimensions differ ({} vs {})", a.dim(), b.dim()));
  }
}
}  // namespace

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_dim(a, b);
  return OperatorMatrix(SparseMatrix(a.m_ * b.m_));
}

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_dim(a, b);
  return OperatorMatrix(SparseMatrix(a.m_ + b.m_));
}

OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_dim(a, b);
  return OperatorMatrix(SparseMatrix(a.m_ - b.m_));
}

OperatorMatrix operator*(cplx s, const OperatorMatrix& a) { return OperatorMatrix(SparseMatrix(s * a.m_)); }

OperatorMatrix transition_operator(int j, LevelIndex a, LevelIndex b, int n_emitters) {
  if (j < 1 || j > n_emitters) {
    throw RangeError(fmt::format("emitter index {} outside [1, {}]", j, n_emitters));
  }
  const std::size_t d = basis_dim(n_emitters);
  std::size_t place = 1;
  for (int k = 1; k < j; ++k) place *= 3;
  const auto from = static_cast<std::size_t>(level_value(b));
  const auto to = static_cast<std::size_t>(level_value(a));

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(d / 3);
  for (std::size_t col = 0; col < d; ++col) {
    if ((col / place) % 3 != from) continue;
    const std::size_t row = col - from * place + to * place;
    trip.emplace_back(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col), 1.0);
  }
  const auto n = static_cast<Eigen::Index>(d);
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return OperatorMatrix(std::move(m));
}

StateVector apply(const OperatorMatrix& op, const StateVector& psi) {
  if (op.dim() != psi.dim()) {
    throw DimensionError(fmt::format("operator dim {} vs state dim {}", op.dim(), psi.dim()));
  }
  return StateVector(psi.n_emitters(), DenseVector(op.sparse() * psi.amplitudes()));
}

cplx expectation(const OperatorMatrix& op, const StateVector& psi) {
  if (op.dim() != psi.dim()) {
    throw DimensionError(fmt::format("operator dim {} vs state dim {}", op.dim(), psi.dim()));
  }
  return psi.amplitudes().dot(op.sparse() * psi.amplitudes());
}

cplx expectation(const OperatorMatrix& op, const DensityMatrix& rho) {
  if (op.dim() != rho.dim()) {
    throw DimensionError(fmt::format("operator dim {} vs density dim {}", op.dim(), rho.dim()));
  }
  // Tr(A rho) = sum_{ik} A_ik rho_ki
  const auto& a = op.sparse();
  const auto& r = rho.elements();
  cplx acc{};
  for (Eigen::Index i = 0; i < a.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) acc += it.value() * r(it.col(), i);
  }
  return acc;
}

}  // namespace bundlesim::hilbert
