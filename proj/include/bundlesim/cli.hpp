#pragma once

// Command-line workflows.
//
//   bundlesim spectrum|master|trajectories|stats [--config PATH] [--workers N]
//             [--seed S] [--deterministic] [--out DIR] [--log PATH]
//   bundlesim reproduce fig2|fig3|fig4 [--trajectories N] [...]
//
// The output directory is --out, else $BUNDLESIM_OUT, else output.directory.

#include "bundlesim/calibration.hpp"
#include "bundlesim/config.hpp"
#include "bundlesim/master.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace bundlesim::cli {

inline constexpr const char* kOutputEnvVar = "BUNDLESIM_OUT";

struct Context {
  std::filesystem::path out_dir = "bundlesim_out";
  unsigned workers = 1;
  bool deterministic = false;  // no timestamps or timings in any output
};

/// Three-level array at integer-wavelength spacing with every emitter pumped,
/// decay rates gamma = 0.05 and gamma_f = 2, Gaussian pulses of width 200
/// spaced 6 apart, and a calibrated pulse strength.
config::RunConfig reference_preset(int n_emitters, int repetitions = 1);

/// Pulse strength used by the run: the calibrated value when
/// pump.calibrate is set (coherent mode only), otherwise pump.nbar.
struct PumpSetting {
  double nbar = 0.0;
  std::optional<calibration::Calibration> calibration;
};
PumpSetting resolve_pump(const config::RunConfig& cfg);

/// Populations on the pumped set plus the waveguide intensity:
/// P_<e...e>, then P_S<m> for m = n-1..1 (P_plus and P_minus for a pair),
/// P_<f...f>, P_<g...g>, excited_fraction and intensity.
master::ObservableSet population_observables(const model::SystemConfig& cfg);

int cmd_spectrum(const config::RunConfig& cfg, const Context& ctx);
int cmd_master(const config::RunConfig& cfg, const Context& ctx);
int cmd_trajectories(const config::RunConfig& cfg, const Context& ctx);
int cmd_stats(const config::RunConfig& cfg, const Context& ctx, const std::filesystem::path& log);
int cmd_reproduce(const std::string& figure, const Context& ctx, std::optional<std::uint64_t> seed,
                  std::optional<std::size_t> n_trajectories);

/// Parses arguments, dispatches, and maps errors to exit codes.
int run_cli(int argc, char** argv);

}  // namespace bundlesim::cli
