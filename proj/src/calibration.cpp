#include "bundlesim/calibration.hpp"

#include "bundlesim/errors.hpp"
#include "bundlesim/master.hpp"

#include <fmt/core.h>

#include <cmath>
#include <numbers>

namespace bundlesim::calibration {

using model::PulseNormalization;
using model::PulseTrain;
using model::SystemConfig;

PumpFidelity pump_fidelity(const SystemConfig& cfg, const PulseTrain& train) {
  if (train.empty()) throw RangeError("pump fidelity needs at least one pulse");
  const auto& first = train.base.front();
  const double hw = first.support_half_width();

  master::IntegrationPlan plan;
  plan.t_start = first.t_peak - hw;
  plan.t_end = first.t_peak + hw;
  plan.dt_pulse = 1.0 / (40.0 * train.narrowest_delta());
  plan.dt_free = plan.dt_pulse;
  plan.sample_every = 1;

  PulseTrain single = train;
  single.repetitions = 1;

  master::ObservableSet obs;
  obs.add("eee", hilbert::OperatorMatrix::projector(model::excited_state(cfg.n_emitters, cfg.pumped)));
  const auto rho0 = hilbert::DensityMatrix::pure(hilbert::StateVector::ground(cfg.n_emitters));
  const auto ts = master::evolve(rho0, plan, obs, cfg, single);

  PumpFidelity f;
  for (std::size_t i = 0; i < ts.times.size(); ++i) {
    if (ts.values[i][0] > f.peak_population) {
      f.peak_population = ts.values[i][0];
      f.peak_time = ts.times[i];
    }
  }
  f.post_pulse_population = ts.values.back()[0];
  return f;
}

double pi_area_nbar(double gamma, double delta, PulseNormalization normalization) {
  if (!(gamma > 0.0)) throw CalibrationError("gamma = 0 leaves the drive uncoupled");
  const double pi = std::numbers::pi;
  // sqrt(gamma/2) * A * sqrt(2 pi) / delta = pi / 2
  const double a = pi * delta / (2.0 * std::sqrt(gamma / 2.0) * std::sqrt(2.0 * pi));
  switch (normalization) {
    case PulseNormalization::UnitArea: return a * a * std::sqrt(pi) / delta;
    case PulseNormalization::RootInside: return a * a * std::pow(pi, 0.25) / delta;
  }
  return 0.0;
}

Calibration calibrate_pi_pulse(const SystemConfig& cfg, double delta, PulseNormalization normalization) {
  cfg.validate();
  if (cfg.pumped.empty()) throw CalibrationError("calibration needs at least one pumped emitter");
  if (!(delta > 0.0)) throw CalibrationError("delta must be positive");

  Calibration out;
  const double n_rate = static_cast<double>(cfg.pumped.size()) * cfg.gamma_1d;
  if (delta < 50.0 * n_rate) {
    out.warnings.push_back(fmt::format("delta {} < 50 n Gamma_1D = {}: decay during the pulse is not negligible",
                                       delta, 50.0 * n_rate));
  }

  const double nominal = pi_area_nbar(cfg.gamma, delta, normalization);
  auto objective = [&](double nbar) {
    PulseTrain train = PulseTrain::for_pumped(cfg, nbar, delta, 0.0, 1.0, 1);
    for (auto& p : train.base) p.normalization = normalization;
    ++out.evaluations;
    return pump_fidelity(cfg, train).post_pulse_population;
  };

  // Pulse area scales as sqrt(nbar): [nominal/4, 9 nominal/4] spans areas pi/2 .. 3pi/2.
  // Search in sqrt(nbar), where the objective is close to sin^2.
  double lo = std::sqrt(nominal / 4.0), hi = std::sqrt(9.0 * nominal / 4.0);
  const double f_lo = objective(lo * lo);
  const double f_hi = objective(hi * hi);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1 * x1), f2 = objective(x2 * x2);
  while (hi - lo > 1e-7 * hi) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2 * x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1 * x1);
    }
  }
  const double best = 0.5 * (lo + hi);
  out.nbar = best * best;
  out.post_pulse_population = objective(out.nbar);
  {
    PulseTrain train = PulseTrain::for_pumped(cfg, out.nbar, delta, 0.0, 1.0, 1);
    for (auto& p : train.base) p.normalization = normalization;
    out.fidelity = pump_fidelity(cfg, train).peak_population;
  }
  if (!(out.post_pulse_population > f_lo) || !(out.post_pulse_population > f_hi)) {
    throw CalibrationError(fmt::format("search over nbar in [{:.4g}, {:.4g}] did not bracket a maximum",
                                       nominal / 4.0, 9.0 * nominal / 4.0));
  }
  return out;
}

}  // namespace bundlesim::calibration
