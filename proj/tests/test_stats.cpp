#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bundlesim/errors.hpp"
#include "bundlesim/stats.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace bundlesim;
using namespace bundlesim::stats;
using trajectories::Channel;
using trajectories::ClickEvent;
using trajectories::TrajectoryRecord;

namespace {

WindowScheme tiling(std::size_t n_windows, double period = 6.0) {
  WindowScheme ws;
  ws.half_width = period / 2.0;
  for (std::size_t w = 0; w < n_windows; ++w) ws.window_centers.push_back((static_cast<double>(w) + 0.5) * period);
  return ws;
}

// n waveguide clicks (alternating R/L) early in every window, each followed by an F click.
EnsembleRecord regular_ensemble(std::size_t n_traj, std::size_t n_windows, int n, double spacing = 0.3) {
  EnsembleRecord ens;
  ens.t_start = 0.0;
  ens.t_end = 6.0 * static_cast<double>(n_windows);
  for (std::size_t t = 0; t < n_traj; ++t) {
    TrajectoryRecord rec;
    rec.trajectory_id = t;
    for (std::size_t w = 0; w < n_windows; ++w) {
      for (int k = 0; k < n; ++k) {
        const double time = 6.0 * static_cast<double>(w) + 0.1 + spacing * k;
        rec.events.push_back({time, k % 2 == 0 ? Channel::WaveguideRight : Channel::WaveguideLeft});
        rec.events.push_back({time + 0.01, Channel::FreeSpaceF});
      }
    }
    ens.records.push_back(std::move(rec));
  }
  return ens;
}

WindowCounts synthetic_counts(std::size_t n_traj, std::size_t n_windows, const std::vector<int>& values) {
  WindowCounts wc;
  wc.n_trajectories = n_traj;
  wc.n_windows = n_windows;
  wc.counts = values;
  return wc;
}

}  // namespace

TEST_CASE("window scheme for a pulse train") {
  auto cfg = model::SystemConfig::uniform(3, 1.0, {1, 2, 3});
  const auto train = model::PulseTrain::for_pumped(cfg, 4182.0, 200.0, 0.05, 6.0, 9);
  const auto ws = WindowScheme::for_train(train);
  REQUIRE(ws.size() == 9);
  CHECK(ws.half_width == 3.0);
  CHECK(ws.lower(0) == doctest::Approx(0.025));
  CHECK(ws.upper(8) == doctest::Approx(54.025));
  CHECK(ws.locate(0.02) == -1);
  CHECK(ws.locate(0.05) == 0);
  CHECK(ws.locate(6.025) == 1);
  CHECK(ws.locate(54.1) == -1);
}

TEST_CASE("window validation") {
  WindowScheme ws;
  ws.half_width = 2.0;
  ws.window_centers = {2.0, 5.0};
  CHECK_THROWS_AS(ws.validate(0.0, 10.0), RangeError);
  ws.window_centers = {2.0, 6.0};
  CHECK_NOTHROW(ws.validate(0.0, 10.0));
  CHECK_THROWS_AS(ws.validate(0.0, 7.0), RangeError);
}

TEST_CASE("counting regular click streams") {
  for (int n = 1; n <= 3; ++n) {
    const auto ens = regular_ensemble(20, 9, n);
    const auto ws = tiling(9);
    const auto wc = count_per_window(ens, ws);
    CHECK(wc.total_waveguide == static_cast<std::size_t>(20 * 9 * n));
    CHECK(wc.unassigned == 0);
    for (int c : wc.counts) CHECK(c == n);
    const auto dists = photon_number_distribution(wc);
    REQUIRE(dists.size() == 9);
    for (const auto& d : dists) {
      CHECK(d.at(n) == 1.0);
      CHECK(d.std_error.at(n) == 0.0);
    }
    const auto pooled = pooled_distribution(wc);
    CHECK(pooled.mean() == doctest::Approx(n));
  }
}

TEST_CASE("clicks outside every window count as leakage") {
  auto ens = regular_ensemble(2, 2, 1);
  ens.t_end = 20.0;
  ens.records[0].events.push_back({13.0, Channel::WaveguideRight});
  const auto wc = count_per_window(ens, tiling(2));
  CHECK(wc.unassigned == 1);
  CHECK(wc.leakage_fraction() == doctest::Approx(1.0 / 5.0));
  const int assigned = std::accumulate(wc.counts.begin(), wc.counts.end(), 0);
  CHECK(static_cast<std::size_t>(assigned) + wc.unassigned == wc.total_waveguide);
}

TEST_CASE("distribution tables sum to one") {
  std::mt19937_64 gen(1);
  std::poisson_distribution<int> pois(1.3);
  std::vector<int> counts(3000);
  for (auto& c : counts) c = pois(gen);
  const auto wc = synthetic_counts(1000, 3, counts);
  for (const auto& d : photon_number_distribution(wc)) {
    double s = 0.0;
    for (const auto& [m, p] : d.probability) s += p;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(photon_number_distribution(synthetic_counts(0, 3, {})), NoDataError);
}

TEST_CASE("interval histogram") {
  const auto ens = regular_ensemble(10, 3, 3, 0.3);
  const auto h = interval_histogram(ens, tiling(3), 3, 0.05);
  CHECK(h.events == 30);
  CHECK(h.gaps.size() == 2 * h.events);
  CHECK(h.median() == doctest::Approx(0.3));
  CHECK(std::accumulate(h.bins.begin(), h.bins.end(), std::size_t{0}) == h.gaps.size());
  CHECK(h.bins[6] == h.gaps.size());
  CHECK_THROWS_AS(interval_histogram(ens, tiling(3), 2), NoDataError);
  CHECK_THROWS_AS(interval_histogram(ens, tiling(3), 1), RangeError);
}

TEST_CASE("falling factorials") {
  CHECK(falling_factorial(5, 0) == 1.0);
  CHECK(falling_factorial(5, 2) == 20.0);
  CHECK(falling_factorial(3, 4) == 0.0);
  CHECK(falling_factorial(0, 1) == 0.0);
}

TEST_CASE("g_n2 on deterministic bundles") {
  for (int n = 1; n <= 3; ++n) {
    const auto ens = regular_ensemble(50, 9, n);
    const auto wc = count_per_window(ens, tiling(9));
    const auto g = g_n2(wc, n, {0, 1, 2, 3, 4});
    CHECK(g.estimates[0] == 0.0);
    for (std::size_t k = 1; k < g.estimates.size(); ++k) {
      CHECK(g.estimates[k] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(g.std_errors[k] == doctest::Approx(0.0).epsilon(1e-12));
    }
    CHECK(g.bootstrap_resamples == kBootstrapResamples);
  }
}

TEST_CASE("g_1^2(0) of Poisson counts is one") {
  std::mt19937_64 gen(2024);
  std::poisson_distribution<int> pois(2.0);
  const std::size_t n_traj = 2000, n_windows = 5;
  std::vector<int> counts(n_traj * n_windows);
  for (auto& c : counts) c = pois(gen);
  const auto g = g_n2(synthetic_counts(n_traj, n_windows, counts), 1, {0, 1});
  CHECK(std::abs(g.estimates[0] - 1.0) < 3.0 * g.std_errors[0]);
  CHECK(std::abs(g.estimates[1] - 1.0) < 3.0 * g.std_errors[1]);
  CHECK(g.std_errors[0] > 0.0);
}

TEST_CASE("estimator consistency on a binomial product distribution") {
  // m ~ Binomial(3, p): E[m(m-1)] / E[m]^2 = 2/3, E[m(m-1)(m-2)(m-3)] = 0
  std::mt19937_64 gen(77);
  std::binomial_distribution<int> bin(3, 0.8);
  const std::size_t n_traj = 10000, n_windows = 1;
  std::vector<int> counts(n_traj * n_windows);
  for (auto& c : counts) c = bin(gen);
  const auto wc = synthetic_counts(n_traj, n_windows, counts);
  const auto g1 = g_n2(wc, 1, {0});
  CHECK(std::abs(g1.estimates[0] - 2.0 / 3.0) < 3.0 * g1.std_errors[0]);
  const auto g2 = g_n2(wc, 2, {0});
  CHECK(g2.estimates[0] == 0.0);
}

TEST_CASE("bootstrap errors are reproducible") {
  std::mt19937_64 gen(3);
  std::poisson_distribution<int> pois(0.7);
  std::vector<int> counts(600);
  for (auto& c : counts) c = pois(gen);
  const auto wc = synthetic_counts(200, 3, counts);
  const auto a = g_n2(wc, 1, {0, 1});
  const auto b = g_n2(wc, 1, {0, 1});
  CHECK(a.std_errors == b.std_errors);
}

TEST_CASE("g_n2 error conditions") {
  const auto wc = count_per_window(regular_ensemble(5, 3, 1), tiling(3));
  CHECK_THROWS_AS(g_n2(wc, 2, {0}), UndefinedEstimateError);
  CHECK_THROWS_AS(g_n2(wc, 1, {3}), RangeError);
  CHECK_THROWS_AS(g_n2(wc, 0, {0}), RangeError);
}

TEST_CASE("intensity series integrates to the mean photon number per window") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 18.0);
  EnsembleRecord ens;
  ens.t_end = 18.0;
  for (int t = 0; t < 100; ++t) {
    TrajectoryRecord rec;
    for (int k = 0; k < 7; ++k) rec.events.push_back({u(gen), Channel::WaveguideLeft});
    rec.events.push_back({u(gen), Channel::FreeSpaceE});
    std::sort(rec.events.begin(), rec.events.end(), [](const ClickEvent& a, const ClickEvent& b) { return a.time < b.time; });
    ens.records.push_back(std::move(rec));
  }
  const auto ws = tiling(3);
  const auto wc = count_per_window(ens, ws);
  const auto dists = photon_number_distribution(wc);
  const auto s = intensity_series(ens, 0.5);
  REQUIRE(s.rate.size() == 36);
  for (std::size_t w = 0; w < 3; ++w) {
    double integral = 0.0;
    for (std::size_t k = 12 * w; k < 12 * (w + 1); ++k) integral += s.rate[k] * s.bin_width;
    CHECK(std::abs(integral - dists[w].mean()) < 1e-12);
  }
}

TEST_CASE("click raster classification matches the distribution masses") {
  std::mt19937_64 gen(4);
  std::discrete_distribution<int> pick({1, 2, 10, 80});
  EnsembleRecord ens;
  ens.t_end = 54.0;
  for (int t = 0; t < 50; ++t) {
    TrajectoryRecord rec;
    for (int w = 0; w < 9; ++w) {
      const int m = pick(gen);
      for (int k = 0; k < m; ++k) rec.events.push_back({6.0 * w + 0.2 + 0.4 * k, Channel::WaveguideRight});
    }
    ens.records.push_back(std::move(rec));
  }
  const auto ws = tiling(9);
  const auto raster = click_raster(ens, ws, 3);
  const auto pooled = pooled_distribution(count_per_window(ens, ws));
  const double cells = static_cast<double>(raster.cells.size());
  CHECK(static_cast<double>(raster.tally(RasterCell::FullBundle)) == pooled.at(3) * cells);
  CHECK(static_cast<double>(raster.tally(RasterCell::OneLoss)) == pooled.at(2) * cells);
  CHECK(static_cast<double>(raster.tally(RasterCell::TwoLoss)) == pooled.at(1) * cells);
  CHECK(static_cast<double>(raster.tally(RasterCell::Other)) == pooled.at(0) * cells);
  CHECK(to_string(RasterCell::OneLoss) == "loss1");
}

TEST_CASE("simulated three-photon bundles stay inside their windows") {
  auto cfg = model::SystemConfig::uniform(3, 1.0, {1, 2, 3});
  const auto train = model::PulseTrain::for_pumped(cfg, 5569.0, 200.0, 0.05, 6.0, 2);
  master::IntegrationPlan plan;
  plan.t_end = 12.05;
  plan.dt_pulse = 5e-5;
  plan.dt_free = 1e-3 / 3.0;
  const auto ens = trajectories::run_ensemble(cfg, train, 21, 200, plan);
  const auto wc = count_per_window(ens, WindowScheme::for_train(train));
  CHECK(wc.total_waveguide > 0);
  CHECK(wc.leakage_fraction() < 0.01);
}
