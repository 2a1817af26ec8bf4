#pragma once

// Run configuration: a sectioned key = value text file.
//
//   [system]  n_emitters, spacing, positions, gamma_1d, gamma, gamma_f, pumped, free_space
//   [pump]    nbar, delta, first_peak, period, repetitions, calibrate, normalization, mode, phase
//   [run]     t_start, t_end, dt_pulse, dt_free, sample_every, n_trajectories, master_seed,
//             snapshot_times, no_jump
//   [stats]   bundle_size, max_lag, interval_bin, intensity_bin, raster_trajectories
//   [output]  directory, formats, plots
//
// '#' starts a comment. Lists are written [a, b, c] or a, b, c. Unknown
// sections and keys are errors.

#include "bundlesim/master.hpp"
#include "bundlesim/model.hpp"
#include "bundlesim/trajectories.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bundlesim::config {

struct SystemSection {
  int n_emitters = 1;
  double spacing = 1.0;
  std::vector<double> positions;  // overrides spacing when non-empty
  double gamma_1d = 1.0;
  double gamma = 0.05;
  double gamma_f = 2.0;
  std::vector<int> pumped;  // empty in the file means every emitter
  model::FreeSpaceModel free_space = model::FreeSpaceModel::Collective;
};

struct PumpSection {
  double nbar = 4182.0;
  double delta = 200.0;
  double first_peak = 0.05;
  double period = 6.0;
  int repetitions = 1;
  bool calibrate = false;
  model::PulseNormalization normalization = model::PulseNormalization::UnitArea;
  model::PumpMode mode = model::PumpMode::Coherent;
  double phase = 0.0;
};

struct RunSection {
  double t_start = 0.0;
  std::optional<double> t_end;    // default: end of the last repetition window
  double dt_pulse = 2.5e-5;
  std::optional<double> dt_free;  // default: largest admissible step
  int sample_every = 20;
  std::size_t n_trajectories = 10000;
  std::uint64_t master_seed = 1;
  std::vector<double> snapshot_times;
  trajectories::NoJumpNormalization no_jump = trajectories::NoJumpNormalization::Renormalize;
};

struct StatsSection {
  std::optional<int> bundle_size;  // default: number of pumped emitters
  int max_lag = 4;
  double interval_bin = 0.05;
  double intensity_bin = 0.05;
  std::size_t raster_trajectories = 20;
};

struct OutputSection {
  std::string directory = "bundlesim_out";
  bool csv = true;
  bool json = true;
  bool plots = true;
};

struct RunConfig {
  SystemSection system;
  PumpSection pump;
  RunSection run;
  StatsSection stats;
  OutputSection output;

  model::SystemConfig system_config() const;
  /// Pulse train with the configured nbar (or `nbar_override`).
  model::PulseTrain pulse_train(std::optional<double> nbar_override = std::nullopt) const;
  master::IntegrationPlan plan() const;
  int bundle_size() const;
  double t_end() const;

  /// Cross-field checks; throws ConfigError naming the offending key.
  void validate() const;
  /// Canonical text of every simulation-relevant field (output section excluded).
  std::string canonical_text() const;
  std::uint64_t fingerprint() const;
};

RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

}  // namespace bundlesim::config
