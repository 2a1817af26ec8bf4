#pragma once

#include "bundlesim/model.hpp"

#include <string>
#include <vector>

namespace bundlesim::calibration {

struct PumpFidelity {
  double peak_population = 0.0;  // max over the pulse window of P(e...e)
  double peak_time = 0.0;
  double post_pulse_population = 0.0;  // P(e...e) at the end of the window
};

/// Master-equation population of |e...e> on the pumped set across the first
/// pulse window of the train, starting from |g...g>.
PumpFidelity pump_fidelity(const model::SystemConfig& cfg, const model::PulseTrain& train);

struct Calibration {
  double nbar = 0.0;
  double fidelity = 0.0;               // peak P(e...e) at the calibrated nbar
  double post_pulse_population = 0.0;  // the maximized objective
  int evaluations = 0;
  std::vector<std::string> warnings;
};

/// Golden-section search for the nbar that maximizes the |e...e> population
/// of cfg.pumped left at the end of the pulse window, for Gaussian pulses of
/// width delta. Throws CalibrationError when the search interval does not
/// bracket a maximum.
Calibration calibrate_pi_pulse(const model::SystemConfig& cfg, double delta,
                               model::PulseNormalization normalization = model::PulseNormalization::UnitArea);

/// nbar whose pulse area sqrt(gamma/2) * integral |alpha| dt equals pi/2.
double pi_area_nbar(double gamma, double delta, model::PulseNormalization normalization);

}  // namespace bundlesim::calibration
