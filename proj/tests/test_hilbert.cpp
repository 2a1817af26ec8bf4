#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bundlesim/errors.hpp"
#include "bundlesim/hilbert.hpp"

#include <random>

using namespace bundlesim;
using namespace bundlesim::hilbert;

TEST_CASE("basis indexing is little-endian base 3") {
  CHECK(basis_dim(1) == 3);
  CHECK(basis_dim(3) == 27);
  const std::vector<LevelIndex> gef{LevelIndex::g, LevelIndex::e, LevelIndex::f};
  CHECK(basis_index(gef) == 0 + 2 * 3 + 1 * 9);
  const std::vector<LevelIndex> eee(3, LevelIndex::e);
  CHECK(basis_index(eee) == 26);
  for (std::size_t i = 0; i < 81; ++i) CHECK(basis_index(decode_basis(i, 4)) == i);
}

TEST_CASE("capacity and range errors") {
  CHECK_THROWS_AS(basis_dim(kMaxEmitters + 1), CapacityError);
  CHECK_THROWS_AS(basis_dim(-1), RangeError);
  CHECK_THROWS_AS(decode_basis(27, 3), RangeError);
  CHECK_THROWS_AS(transition_operator(4, LevelIndex::e, LevelIndex::f, 3), RangeError);
}

TEST_CASE("transition operators act on one emitter") {
  const int n = 3;
  const std::vector<LevelIndex> ffe{LevelIndex::f, LevelIndex::f, LevelIndex::e};
  const auto psi = StateVector::basis_state(ffe);
  const auto out = apply(transition_operator(3, LevelIndex::f, LevelIndex::e, n), psi);
  const std::vector<LevelIndex> fff(3, LevelIndex::f);
  CHECK(std::abs(out[basis_index(fff)] - cplx(1.0)) < 1e-15);
  CHECK(out.norm() == doctest::Approx(1.0));
  const auto none = apply(transition_operator(1, LevelIndex::f, LevelIndex::e, n), psi);
  CHECK(none.norm() == 0.0);
}

TEST_CASE("sigma algebra: s_ab s_bc = s_ac and adjoint swaps labels") {
  const int n = 2;
  const auto ef = transition_operator(2, LevelIndex::e, LevelIndex::f, n);
  const auto fg = transition_operator(2, LevelIndex::f, LevelIndex::g, n);
  const auto eg = transition_operator(2, LevelIndex::e, LevelIndex::g, n);
  CHECK((ef * fg - eg).dense().norm() < 1e-15);
  CHECK((ef.adjoint() - transition_operator(2, LevelIndex::f, LevelIndex::e, n)).dense().norm() < 1e-15);
  // operators on different emitters commute
  const auto a = transition_operator(1, LevelIndex::e, LevelIndex::g, n);
  CHECK((a * ef - ef * a).dense().norm() < 1e-15);
}

TEST_CASE("projector and expectation") {
  const int n = 2;
  DenseVector v = DenseVector::Zero(9);
  v[0] = cplx(0.6, 0.0);
  v[8] = cplx(0.0, 0.8);
  const StateVector psi(n, v);
  const auto p = OperatorMatrix::projector(psi);
  CHECK(p.hermiticity_defect() < 1e-15);
  CHECK(std::abs(expectation(p, psi) - cplx(1.0)) < 1e-14);
  const auto rho = DensityMatrix::pure(psi);
  CHECK(std::abs(rho.trace() - cplx(1.0)) < 1e-14);
  CHECK(rho.population(0) == doctest::Approx(0.36));
  CHECK(rho.population(8) == doctest::Approx(0.64));
  CHECK(std::abs(expectation(OperatorMatrix::projector(9, 8), rho) - cplx(0.64)) < 1e-14);
}

TEST_CASE("density matrix diagnostics") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  DenseMatrix a(9, 9);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = cplx(nd(gen), nd(gen));
  DenseMatrix r = a * a.adjoint();
  r /= r.trace().real();
  const DensityMatrix rho(2, r);
  CHECK(rho.hermiticity_defect() < 1e-14);
  CHECK(rho.min_eigenvalue() > -1e-14);
  CHECK_THROWS_AS(DensityMatrix(2, DenseMatrix::Zero(4, 4)), DimensionError);
}

TEST_CASE("normalize rescales to unit norm") {
  StateVector psi(1);
  psi.amplitudes()[2] = cplx(3.0, 4.0);
  psi.normalize();
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-15));
  StateVector zero(1);
  CHECK_THROWS_AS(zero.normalize(), NumericalError);
}
