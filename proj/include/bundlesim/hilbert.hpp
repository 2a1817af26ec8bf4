#pragma once

// Basis indexing and state/operator containers on the 3^N space of N
// three-level emitters.
//
// Basis convention: emitter 1 is the least-significant base-3 digit, and the
// digit of each emitter is its level (g = 0, f = 1, e = 2). The basis state
// |l_1 l_2 ... l_N> has index sum_j l_j * 3^(j-1).

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace bundlesim {

using cplx = std::complex<double>;

namespace hilbert {

inline constexpr int kMaxEmitters = 8;

enum class LevelIndex : int { g = 0, f = 1, e = 2 };

inline constexpr int level_value(LevelIndex l) { return static_cast<int>(l); }

using DenseVector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

std::size_t basis_dim(int n_emitters);
std::size_t basis_index(std::span<const LevelIndex> levels);
std::vector<LevelIndex> decode_basis(std::size_t index, int n_emitters);

/// Dense amplitude vector on the 3^N space. Not renormalized implicitly;
/// algorithms that require unit norm (the Monte Carlo step) enforce it.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(int n_emitters);
  StateVector(int n_emitters, DenseVector amplitudes);

  static StateVector basis_state(std::span<const LevelIndex> levels);
  static StateVector ground(int n_emitters);

  int n_emitters() const { return n_emitters_; }
  std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
  const DenseVector& amplitudes() const { return amps_; }
  DenseVector& amplitudes() { return amps_; }
  cplx operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }

  double norm() const { return amps_.norm(); }
  void normalize();

 private:
  int n_emitters_ = 0;
  DenseVector amps_;
};

/// Dense density matrix on the 3^N space.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(int n_emitters);
  DensityMatrix(int n_emitters, DenseMatrix elements);

  static DensityMatrix pure(const StateVector& psi);

  int n_emitters() const { return n_emitters_; }
  std::size_t dim() const { return static_cast<std::size_t>(rho_.rows()); }
  const DenseMatrix& elements() const { return rho_; }
  DenseMatrix& elements() { return rho_; }

  cplx trace() const { return rho_.trace(); }
  double hermiticity_defect() const;
  double min_eigenvalue() const;
  double population(std::size_t basis) const;

 private:
  int n_emitters_ = 0;
  DenseMatrix rho_;
};

/// Sparse complex operator. The sparsity pattern is fixed at construction;
/// arithmetic returns new operators.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  explicit OperatorMatrix(SparseMatrix m);
  static OperatorMatrix zero(std::size_t dim);
  static OperatorMatrix identity(std::size_t dim);
  /// |basis><basis|
  static OperatorMatrix projector(std::size_t dim, std::size_t basis);
  /// |psi><psi| (dense pattern restricted to the support of psi).
  static OperatorMatrix projector(const StateVector& psi);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const SparseMatrix& sparse() const { return m_; }
  DenseMatrix dense() const { return DenseMatrix(m_); }
  std::size_t nonzeros() const { return static_cast<std::size_t>(m_.nonZeros()); }

  OperatorMatrix adjoint() const;
  double hermiticity_defect() const;

  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a);

 private:
  SparseMatrix m_;
};

/// sigma_ab^j = |a><b| on emitter j (1-based), identity elsewhere.
OperatorMatrix transition_operator(int j, LevelIndex a, LevelIndex b, int n_emitters);

StateVector apply(const OperatorMatrix& op, const StateVector& psi);

cplx expectation(const OperatorMatrix& op, const StateVector& psi);
cplx expectation(const OperatorMatrix& op, const DensityMatrix& rho);

}  // namespace hilbert
}  // namespace bundlesim
