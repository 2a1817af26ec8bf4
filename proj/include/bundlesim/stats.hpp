#pragma once

// Photon-counting statistics over Monte Carlo click records. The signal is
// the waveguide photon count (right + left); free-space clicks are ignored.

#include "bundlesim/trajectories.hpp"

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

namespace bundlesim::stats {

using trajectories::EnsembleRecord;

/// Counting windows [center - half_width, center + half_width).
struct WindowScheme {
  std::vector<double> window_centers;
  double half_width = 3.0;

  /// Windows tiling the repetition period, each starting at the leading edge
  /// of a pulse: [t_peak - 5/Delta, t_peak - 5/Delta + period).
  static WindowScheme for_train(const model::PulseTrain& train);

  double lower(std::size_t w) const { return window_centers[w] - half_width; }
  double upper(std::size_t w) const { return window_centers[w] + half_width; }
  std::size_t size() const { return window_centers.size(); }

  /// Throws RangeError if windows overlap or leave [t_start, t_end].
  void validate(double t_start, double t_end) const;
  /// Window index containing t, or -1.
  int locate(double t) const;
};

struct WindowCounts {
  std::size_t n_trajectories = 0;
  std::size_t n_windows = 0;
  std::vector<int> counts;  // row-major [trajectory][window]
  std::size_t total_waveguide = 0;
  std::size_t unassigned = 0;  // waveguide clicks outside every window

  int at(std::size_t traj, std::size_t window) const { return counts[traj * n_windows + window]; }
  double leakage_fraction() const;
};

WindowCounts count_per_window(const EnsembleRecord& ens, const WindowScheme& ws);

struct PhotonNumberDistribution {
  std::map<int, double> probability;
  std::map<int, double> std_error;  // binomial sqrt(p(1-p)/N)
  std::size_t samples = 0;
  double mean() const;
  double at(int m) const;
};

/// One distribution per window index.
std::vector<PhotonNumberDistribution> photon_number_distribution(const WindowCounts& wc);
/// All (trajectory, window) cells pooled.
PhotonNumberDistribution pooled_distribution(const WindowCounts& wc);

struct IntervalHistogram {
  int bundle_size = 2;
  double bin_width = 0.05;
  std::vector<std::size_t> bins;  // bins[k] counts gaps in [k w, (k+1) w)
  std::vector<double> gaps;       // all collected gaps
  std::size_t events = 0;         // windows holding exactly bundle_size clicks
  double median() const;
};

IntervalHistogram interval_histogram(const EnsembleRecord& ens, const WindowScheme& ws, int n,
                                     double bin_width = 0.05);

/// Falling factorial m (m-1) ... (m-k+1).
double falling_factorial(int m, int k);

struct CorrelationSeries {
  int order = 1;
  std::vector<int> lags;
  std::vector<double> estimates;
  std::vector<double> std_errors;
  int bootstrap_resamples = 0;
};

inline constexpr int kBootstrapResamples = 200;
inline constexpr std::uint64_t kBootstrapSeed = 0x5eed'b007'57a7'0001ull;

/// Generalized second-order correlation of n-photon bundles at integer
/// window lags. Lag 0 is the same-window factorial moment
///   <mu_2n(m)> / <mu_n(m)>^2,
/// lag k >= 1 is <mu_n(m_w) mu_n(m_{w+k})> / (<mu_n(m_w)> <mu_n(m_{w+k})>).
/// Standard errors come from a trajectory-level bootstrap.
CorrelationSeries g_n2(const WindowCounts& wc, int n, const std::vector<int>& lags,
                       int resamples = kBootstrapResamples);

struct IntensitySeries {
  double bin_width = 0.1;
  double t_start = 0.0;
  std::vector<double> rate;  // waveguide clicks per trajectory per unit time
  double bin_center(std::size_t k) const { return t_start + (static_cast<double>(k) + 0.5) * bin_width; }
};

IntensitySeries intensity_series(const EnsembleRecord& ens, double bin_width);

enum class RasterCell { FullBundle, OneLoss, TwoLoss, Other };
std::string_view to_string(RasterCell c);

struct ClickRaster {
  int bundle_size = 1;
  std::size_t n_trajectories = 0;
  std::size_t n_windows = 0;
  std::vector<RasterCell> cells;  // row-major [trajectory][window]
  RasterCell at(std::size_t traj, std::size_t window) const { return cells[traj * n_windows + window]; }
  std::size_t tally(RasterCell c) const;
};

ClickRaster click_raster(const EnsembleRecord& ens, const WindowScheme& ws, int n);

}  // namespace bundlesim::stats
