#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bundlesim/errors.hpp"
#include "bundlesim/master.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace bundlesim;
using namespace bundlesim::master;
using model::FreeSpaceModel;
using model::LevelIndex;
using model::StateVector;

namespace {

constexpr LevelIndex F = LevelIndex::f;
constexpr LevelIndex E = LevelIndex::e;

DensityMatrix basis_rho(std::vector<LevelIndex> levels) {
  return DensityMatrix::pure(StateVector::basis_state(levels));
}

OperatorMatrix basis_projector(std::vector<LevelIndex> levels) {
  return OperatorMatrix::projector(hilbert::basis_dim(static_cast<int>(levels.size())), hilbert::basis_index(levels));
}

std::vector<int> all_emitters(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 1);
  return v;
}

// Index of the largest entry of a column.
std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("rk4 step leaves a stationary state unchanged") {
  auto cfg = model::SystemConfig::uniform(2, 1.0, {});
  cfg.gamma_1d = cfg.gamma = cfg.gamma_f = 0.0;
  const auto rho = basis_rho({E, F});
  const auto next = rk4_step(rho, 0.0, 1e-3, cfg, model::PulseTrain::none());
  CHECK((next.elements() - rho.elements()).norm() == 0.0);
}

TEST_CASE("single emitter decay matches the exponential oracle") {
  auto cfg = model::SystemConfig::uniform(1, 1.0, {1});
  cfg.free_space = FreeSpaceModel::Independent;
  IntegrationPlan plan;
  plan.t_end = 3.0;
  plan.sample_every = 50;
  ObservableSet obs;
  obs.add("e", basis_projector({E}));
  obs.add("f", basis_projector({F}));
  obs.add("id", OperatorMatrix::identity(3));
  const auto ts = evolve(basis_rho({E}), plan, obs, cfg, model::PulseTrain::none());
  const auto pe = ts.column("e");
  const auto id = ts.column("id");
  for (std::size_t i = 0; i < ts.times.size(); ++i) {
    CHECK(std::abs(pe[i] - std::exp(-1.05 * ts.times[i])) < 1e-6);
    CHECK(std::abs(id[i] - 1.0) < 1e-8);
  }
  const auto one = static_cast<std::size_t>(std::find_if(ts.times.begin(), ts.times.end(),
                                                         [](double t) { return std::abs(t - 1.0) < 1e-9; }) -
                                            ts.times.begin());
  REQUIRE(one < ts.times.size());
  CHECK(pe[one] == doctest::Approx(0.3499).epsilon(1e-4));
}

TEST_CASE("single emitter cascade matches the two-stage rate solution") {
  auto cfg = model::SystemConfig::uniform(1, 1.0, {1});
  cfg.free_space = FreeSpaceModel::Independent;
  cfg.gamma = 0.0;
  IntegrationPlan plan;
  plan.t_end = 2.0;
  plan.sample_times = {0.5, 1.0, 2.0};
  ObservableSet obs;
  obs.add("f", basis_projector({F}));
  const auto ts = evolve(basis_rho({E}), plan, obs, cfg, model::PulseTrain::none());
  REQUIRE(ts.times.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double t = ts.times[i];
    CHECK(std::abs(ts.values[i][0] - (std::exp(-t) - std::exp(-2.0 * t))) < 1e-8);
  }
  CHECK(ts.values[1][0] == doctest::Approx(0.2325).epsilon(1e-3));
}

TEST_CASE("empty pump leaves the ground state fixed") {
  const auto cfg = model::SystemConfig::uniform(2, 1.0, {});
  IntegrationPlan plan;
  plan.t_end = 0.5;
  const auto rho0 = DensityMatrix::pure(StateVector::ground(2));
  const auto ts = evolve(rho0, plan, ObservableSet{}, cfg, model::PulseTrain::none());
  CHECK((ts.final_state.elements() - rho0.elements()).norm() == 0.0);
}

TEST_CASE("with all rates zero the spectrum of rho is conserved") {
  auto cfg = model::SystemConfig::uniform(3, 0.37, {});
  cfg.gamma_1d = cfg.gamma = cfg.gamma_f = 0.0;
  hilbert::DenseMatrix mix = hilbert::DenseMatrix::Zero(27, 27);
  const auto a = StateVector::basis_state(std::vector<LevelIndex>{E, F, F});
  const auto b = StateVector::basis_state(std::vector<LevelIndex>{F, E, E});
  mix += 0.7 * a.amplitudes() * a.amplitudes().adjoint();
  mix += 0.3 * b.amplitudes() * b.amplitudes().adjoint();
  const DensityMatrix rho0(3, mix);
  IntegrationPlan plan;
  plan.t_end = 1.0;
  const auto ts = evolve(rho0, plan, ObservableSet{}, cfg, model::PulseTrain::none());
  Eigen::SelfAdjointEigenSolver<hilbert::DenseMatrix> e0(rho0.elements()), e1(ts.final_state.elements());
  CHECK((e0.eigenvalues() - e1.eigenvalues()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("driven three-emitter run preserves density-matrix invariants") {
  auto cfg = model::SystemConfig::uniform(3, 0.8, {1, 2, 3});
  const auto train = model::PulseTrain::for_pumped(cfg, 4182.0, 200.0, 0.05, 6.0, 1);
  IntegrationPlan plan;
  plan.t_end = 1.0;
  plan.dt_pulse = 2.5e-4;
  plan.dt_free = 2.5e-4;
  plan.sample_times = {0.03, 0.05, 0.07, 0.2, 0.5, 1.0};
  const auto grid = TimeGrid::build(plan, train);
  const MasterEquation me(cfg, train);
  auto rho = DensityMatrix::pure(StateVector::ground(3));
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    rho = me.rk4_step(rho, grid.time(i), grid.time(i + 1) - grid.time(i));
    if (grid.is_sample(i + 1)) {
      CHECK(std::abs(rho.trace() - cplx(1.0)) < 1e-12);
      CHECK(rho.hermiticity_defect() < 1e-12);
      CHECK(rho.min_eigenvalue() > -1e-6);
    }
  }
}

TEST_CASE("halving the step changes sampled observables by less than 1e-6") {
  auto cfg = model::SystemConfig::uniform(2, 1.0, {1, 2});
  const auto train = model::PulseTrain::for_pumped(cfg, 4182.0, 200.0, 0.1, 6.0, 1);
  ObservableSet obs;
  obs.add("ee", basis_projector({E, E}));
  obs.add("plus", OperatorMatrix::projector(model::symmetric_state(2, {1, 2}, 1)));
  obs.add("ff", basis_projector({F, F}));
  IntegrationPlan coarse;
  coarse.t_end = 2.0;
  coarse.dt_pulse = 2.5e-4;
  coarse.dt_free = 5e-4;
  coarse.sample_times = {0.1, 0.125, 0.5, 1.0, 2.0};
  IntegrationPlan fine = coarse;
  fine.dt_pulse /= 2.0;
  fine.dt_free /= 2.0;
  const auto rho0 = DensityMatrix::pure(StateVector::ground(2));
  const auto a = evolve(rho0, coarse, obs, cfg, train);
  const auto b = evolve(rho0, fine, obs, cfg, train);
  REQUIRE(a.times == b.times);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    for (std::size_t k = 0; k < obs.size(); ++k) worst = std::max(worst, std::abs(a.values[i][k] - b.values[i][k]));
  CHECK(worst < 1e-6);
}

TEST_CASE("two pumped emitters never populate the subradiant state") {
  const auto cfg = model::SystemConfig::uniform(2, 1.0, {1, 2});
  const auto train = model::PulseTrain::for_pumped(cfg, 4182.0, 200.0, 0.1, 6.0, 1);
  IntegrationPlan plan;
  plan.t_end = 6.0;
  plan.dt_free = 5e-4;
  plan.sample_every = 20;
  ObservableSet obs;
  hilbert::DenseVector minus = model::symmetric_state(2, {1, 2}, 1).amplitudes();
  minus[static_cast<Eigen::Index>(hilbert::basis_index(std::vector<LevelIndex>{F, E}))] *= -1.0;
  obs.add("minus", OperatorMatrix::projector(StateVector(2, minus)));
  const auto ts = evolve(DensityMatrix::pure(StateVector::ground(2)), plan, obs, cfg, train);
  const auto col = ts.column("minus");
  CHECK(*std::max_element(col.begin(), col.end()) < 1e-3);
}

TEST_CASE("three pumped emitters cascade through the symmetric ladder") {
  const auto cfg = model::SystemConfig::uniform(3, 1.0, {1, 2, 3});
  const auto train = model::PulseTrain::for_pumped(cfg, 4182.0, 200.0, 0.1, 6.0, 1);
  IntegrationPlan plan;
  plan.t_end = 4.0;
  plan.dt_pulse = 5e-4;
  plan.dt_free = 1e-3 / 3.0;
  plan.sample_every = 10;
  ObservableSet obs;
  obs.add("eee", OperatorMatrix::projector(model::excited_state(3, all_emitters(3))));
  obs.add("S2", OperatorMatrix::projector(model::symmetric_state(3, all_emitters(3), 2)));
  obs.add("S1", OperatorMatrix::projector(model::symmetric_state(3, all_emitters(3), 1)));
  obs.add("fff", OperatorMatrix::projector(model::symmetric_state(3, all_emitters(3), 0)));
  const auto ts = evolve(DensityMatrix::pure(StateVector::ground(3)), plan, obs, cfg, train);
  const auto t_eee = ts.times[argmax(ts.column("eee"))];
  const auto t_s2 = ts.times[argmax(ts.column("S2"))];
  const auto t_s1 = ts.times[argmax(ts.column("S1"))];
  const auto t_fff = ts.times[argmax(ts.column("fff"))];
  CHECK(t_eee < t_s2);
  CHECK(t_s2 < t_s1);
  CHECK(t_s1 < t_fff);
}

TEST_CASE("waveguide intensity") {
  const auto cfg1 = model::SystemConfig::uniform(1, 1.0, {1});
  CHECK(waveguide_intensity(basis_rho({E}), cfg1) == doctest::Approx(1.0));
  CHECK(waveguide_intensity(basis_rho({F}), cfg1) == 0.0);
  for (int n = 1; n <= 4; ++n) {
    const auto cfg = model::SystemConfig::uniform(n, 1.0, all_emitters(n));
    const auto rho = DensityMatrix::pure(model::excited_state(n, all_emitters(n)));
    CHECK(waveguide_intensity(rho, cfg) == doctest::Approx(n));
  }
}

TEST_CASE("ideal pump flips the target instantly") {
  auto cfg = model::SystemConfig::uniform(1, 1.0, {1});
  cfg.free_space = FreeSpaceModel::Independent;
  auto train = model::PulseTrain::for_pumped(cfg, 4182.0, 200.0, 0.5, 6.0, 1);
  train.mode = model::PumpMode::Ideal;
  IntegrationPlan plan;
  plan.t_end = 1.5;
  plan.sample_times = {0.5, 1.5};
  ObservableSet obs;
  obs.add("e", basis_projector({E}));
  const auto ts = evolve(DensityMatrix::pure(StateVector::ground(1)), plan, obs, cfg, train);
  CHECK(ts.values[0][0] == doctest::Approx(1.0));
  CHECK(std::abs(ts.values[1][0] - std::exp(-1.05)) < 1e-6);
}

TEST_CASE("plan validation") {
  const auto cfg = model::SystemConfig::uniform(2, 1.0, {1, 2});
  const auto train = model::PulseTrain::for_pumped(cfg, 4182.0, 200.0, 0.1, 6.0, 1);
  IntegrationPlan plan;
  plan.dt_free = 1e-3;
  CHECK_THROWS_AS(plan.validate(cfg, train), StepSizeError);
  plan.dt_free = 5e-4;
  plan.dt_pulse = 1e-3;
  CHECK_THROWS_AS(plan.validate(cfg, train), StepSizeError);
  plan.dt_pulse = 5e-4;
  CHECK_NOTHROW(plan.validate(cfg, train));
  plan.t_end = plan.t_start;
  CHECK_THROWS_AS(plan.validate(cfg, train), RangeError);
}

TEST_CASE("an oversized raw step is rejected") {
  auto cfg = model::SystemConfig::uniform(1, 1.0, {1});
  CHECK_THROWS_AS(rk4_step(basis_rho({E}), 0.0, 5.0, cfg, model::PulseTrain::none()), StepSizeError);
}

TEST_CASE("observables must be Hermitian") {
  ObservableSet obs;
  CHECK_THROWS_AS(obs.add("x", hilbert::transition_operator(1, E, F, 1)), RangeError);
}
