#include "bundlesim/stats.hpp"

#include "bundlesim/errors.hpp"
#include "bundlesim/rng.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bundlesim::stats {

using trajectories::is_waveguide;

WindowScheme WindowScheme::for_train(const model::PulseTrain& train) {
  WindowScheme ws;
  ws.half_width = 0.5 * train.period;
  if (train.empty()) return ws;
  const double lead = train.base.front().support_half_width();
  for (double peak : train.repetition_peaks()) ws.window_centers.push_back(peak - lead + ws.half_width);
  return ws;
}

void WindowScheme::validate(double t_start, double t_end) const {
  if (!(half_width > 0.0)) throw RangeError("window half_width must be positive");
  const double tol = 1e-9;
  for (std::size_t w = 0; w < size(); ++w) {
    if (lower(w) < t_start - tol || upper(w) > t_end + tol) {
      throw RangeError(fmt::format("window {} [{}, {}) leaves the simulated span [{}, {}]", w, lower(w), upper(w),
                                   t_start, t_end));
    }
    if (w > 0 && lower(w) < upper(w - 1) - tol) {
      throw RangeError(fmt::format("windows {} and {} overlap", w - 1, w));
    }
  }
}

int WindowScheme::locate(double t) const {
  // windows are ordered and disjoint
  const auto it = std::upper_bound(window_centers.begin(), window_centers.end(), t + half_width);
  if (it == window_centers.begin()) return -1;
  const auto w = static_cast<std::size_t>(it - window_centers.begin()) - 1;
  return (t >= lower(w) && t < upper(w)) ? static_cast<int>(w) : -1;
}

double WindowCounts::leakage_fraction() const {
  return total_waveguide == 0 ? 0.0 : static_cast<double>(unassigned) / static_cast<double>(total_waveguide);
}

WindowCounts count_per_window(const EnsembleRecord& ens, const WindowScheme& ws) {
  if (!ens.records.empty()) ws.validate(ens.t_start, ens.t_end);
  WindowCounts wc;
  wc.n_trajectories = ens.records.size();
  wc.n_windows = ws.size();
  wc.counts.assign(wc.n_trajectories * wc.n_windows, 0);
  for (std::size_t t = 0; t < ens.records.size(); ++t) {
    for (const auto& ev : ens.records[t].events) {
      if (!is_waveguide(ev.channel)) continue;
      ++wc.total_waveguide;
      const int w = ws.locate(ev.time);
      if (w < 0) {
        ++wc.unassigned;
      } else {
        ++wc.counts[t * wc.n_windows + static_cast<std::size_t>(w)];
      }
    }
  }
  return wc;
}

double PhotonNumberDistribution::mean() const {
  double m = 0.0;
  for (const auto& [k, p] : probability) m += k * p;
  return m;
}

double PhotonNumberDistribution::at(int m) const {
  const auto it = probability.find(m);
  return it == probability.end() ? 0.0 : it->second;
}

namespace {
PhotonNumberDistribution tabulate(const std::map<int, std::size_t>& hist, std::size_t n) {
  PhotonNumberDistribution d;
  d.samples = n;
  for (const auto& [m, c] : hist) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    d.probability[m] = p;
    d.std_error[m] = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  }
  return d;
}
}  // namespace

std::vector<PhotonNumberDistribution> photon_number_distribution(const WindowCounts& wc) {
  if (wc.n_trajectories == 0) throw NoDataError("photon-number distribution needs at least one trajectory");
  std::vector<PhotonNumberDistribution> out;
  for (std::size_t w = 0; w < wc.n_windows; ++w) {
    std::map<int, std::size_t> hist;
    for (std::size_t t = 0; t < wc.n_trajectories; ++t) ++hist[wc.at(t, w)];
    out.push_back(tabulate(hist, wc.n_trajectories));
  }
  return out;
}

PhotonNumberDistribution pooled_distribution(const WindowCounts& wc) {
  if (wc.n_trajectories == 0 || wc.n_windows == 0) throw NoDataError("no counting cells");
  std::map<int, std::size_t> hist;
  for (int c : wc.counts) ++hist[c];
  return tabulate(hist, wc.counts.size());
}

double IntervalHistogram::median() const {
  if (gaps.empty()) return std::nan("");
  std::vector<double> g = gaps;
  const auto mid = g.size() / 2;
  std::nth_element(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(mid), g.end());
  if (g.size() % 2 == 1) return g[mid];
  const double upper = g[mid];
  std::nth_element(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(mid - 1), g.end());
  return 0.5 * (g[mid - 1] + upper);
}

IntervalHistogram interval_histogram(const EnsembleRecord& ens, const WindowScheme& ws, int n, double bin_width) {
  if (n < 2) throw RangeError(fmt::format("bundle size must be >= 2, got {}", n));
  if (!(bin_width > 0.0)) throw RangeError("bin width must be positive");
  if (!ens.records.empty()) ws.validate(ens.t_start, ens.t_end);

  IntervalHistogram h;
  h.bundle_size = n;
  h.bin_width = bin_width;
  std::vector<std::vector<double>> per_window(ws.size());
  for (const auto& rec : ens.records) {
    for (auto& v : per_window) v.clear();
    for (const auto& ev : rec.events) {
      if (!is_waveguide(ev.channel)) continue;
      const int w = ws.locate(ev.time);
      if (w >= 0) per_window[static_cast<std::size_t>(w)].push_back(ev.time);
    }
    for (const auto& times : per_window) {
      if (static_cast<int>(times.size()) != n) continue;
      ++h.events;
      for (std::size_t k = 1; k < times.size(); ++k) h.gaps.push_back(times[k] - times[k - 1]);
    }
  }
  if (h.events == 0) throw NoDataError(fmt::format("no window holds exactly {} waveguide clicks", n));
  for (double g : h.gaps) {
    // the 1e-9 nudge keeps gaps that are exact bin multiples in their own bin
    const auto k = static_cast<std::size_t>(std::floor(g / bin_width + 1e-9));
    if (k >= h.bins.size()) h.bins.resize(k + 1, 0);
    ++h.bins[k];
  }
  return h;
}

double falling_factorial(int m, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= static_cast<double>(m - i);
  return r;
}

namespace {

struct LagSums {
  std::vector<double> num, a, b;  // per trajectory
  double pairs_per_trajectory = 0.0;
};

LagSums lag_sums(const WindowCounts& wc, int n, int lag) {
  LagSums s;
  const std::size_t n_traj = wc.n_trajectories;
  s.num.assign(n_traj, 0.0);
  s.a.assign(n_traj, 0.0);
  s.b.assign(n_traj, 0.0);
  const auto w_max = wc.n_windows - static_cast<std::size_t>(lag);
  s.pairs_per_trajectory = static_cast<double>(w_max);
  for (std::size_t t = 0; t < n_traj; ++t) {
    for (std::size_t w = 0; w < w_max; ++w) {
      const int m0 = wc.at(t, w);
      if (lag == 0) {
        s.num[t] += falling_factorial(m0, 2 * n);
        const double mu = falling_factorial(m0, n);
        s.a[t] += mu;
        s.b[t] += mu;
      } else {
        const int m1 = wc.at(t, w + static_cast<std::size_t>(lag));
        const double mu0 = falling_factorial(m0, n), mu1 = falling_factorial(m1, n);
        s.num[t] += mu0 * mu1;
        s.a[t] += mu0;
        s.b[t] += mu1;
      }
    }
  }
  return s;
}

// Returns NaN when the denominator vanishes.
double estimate(const LagSums& s, const std::vector<double>& weight) {
  double num = 0.0, a = 0.0, b = 0.0, total = 0.0;
  for (std::size_t t = 0; t < weight.size(); ++t) {
    if (weight[t] == 0.0) continue;
    num += weight[t] * s.num[t];
    a += weight[t] * s.a[t];
    b += weight[t] * s.b[t];
    total += weight[t];
  }
  const double cells = total * s.pairs_per_trajectory;
  const double denom = (a / cells) * (b / cells);
  if (!(denom > 0.0)) return std::nan("");
  return (num / cells) / denom;
}

}  // namespace

CorrelationSeries g_n2(const WindowCounts& wc, int n, const std::vector<int>& lags, int resamples) {
  if (n < 1) throw RangeError(fmt::format("correlation order must be >= 1, got {}", n));
  if (wc.n_trajectories == 0) throw NoDataError("no trajectories");
  CorrelationSeries cs;
  cs.order = n;
  cs.lags = lags;
  cs.bootstrap_resamples = resamples;

  const std::size_t n_traj = wc.n_trajectories;
  const std::vector<double> ones(n_traj, 1.0);
  std::vector<std::vector<double>> weights;
  weights.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    std::vector<double> w(n_traj, 0.0);
    for (std::size_t k = 0; k < n_traj; ++k) {
      const double u = rng::uniform(kBootstrapSeed, static_cast<std::uint64_t>(r), k);
      ++w[std::min(n_traj - 1, static_cast<std::size_t>(u * static_cast<double>(n_traj)))];
    }
    weights.push_back(std::move(w));
  }

  for (int lag : lags) {
    if (lag < 0 || static_cast<std::size_t>(lag) >= wc.n_windows) {
      throw RangeError(fmt::format("lag {} needs more than {} windows", lag, wc.n_windows));
    }
    const auto sums = lag_sums(wc, n, lag);
    const double g = estimate(sums, ones);
    if (std::isnan(g)) {
      throw UndefinedEstimateError(fmt::format("g_{}^2({}) undefined: no {}-photon events", n, lag, n));
    }
    double s1 = 0.0, s2 = 0.0;
    int used = 0;
    for (const auto& w : weights) {
      const double gb = estimate(sums, w);
      if (std::isnan(gb)) continue;
      s1 += gb;
      s2 += gb * gb;
      ++used;
    }
    const double se = used > 1 ? std::sqrt(std::max(0.0, (s2 - s1 * s1 / used) / (used - 1))) : 0.0;
    cs.estimates.push_back(g);
    cs.std_errors.push_back(se);
  }
  return cs;
}

IntensitySeries intensity_series(const EnsembleRecord& ens, double bin_width) {
  if (!(bin_width > 0.0)) throw RangeError("bin width must be positive");
  IntensitySeries s;
  s.bin_width = bin_width;
  s.t_start = ens.t_start;
  const double span = ens.t_end - ens.t_start;
  const auto n_bins = static_cast<std::size_t>(std::max(1.0, std::ceil(span / bin_width - 1e-9)));
  s.rate.assign(n_bins, 0.0);
  if (ens.records.empty()) return s;
  const double norm = 1.0 / (static_cast<double>(ens.records.size()) * bin_width);
  for (const auto& rec : ens.records) {
    for (const auto& ev : rec.events) {
      if (!is_waveguide(ev.channel)) continue;
      auto k = static_cast<std::size_t>(std::floor((ev.time - ens.t_start) / bin_width));
      k = std::min(k, n_bins - 1);
      s.rate[k] += norm;
    }
  }
  return s;
}

std::string_view to_string(RasterCell c) {
  switch (c) {
    case RasterCell::FullBundle: return "full";
    case RasterCell::OneLoss: return "loss1";
    case RasterCell::TwoLoss: return "loss2";
    case RasterCell::Other: return "other";
  }
  return "?";
}

std::size_t ClickRaster::tally(RasterCell c) const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), c));
}

ClickRaster click_raster(const EnsembleRecord& ens, const WindowScheme& ws, int n) {
  if (n < 1) throw RangeError(fmt::format("bundle size must be >= 1, got {}", n));
  const auto wc = count_per_window(ens, ws);
  ClickRaster r;
  r.bundle_size = n;
  r.n_trajectories = wc.n_trajectories;
  r.n_windows = wc.n_windows;
  r.cells.reserve(wc.counts.size());
  for (int m : wc.counts) {
    if (m == n) {
      r.cells.push_back(RasterCell::FullBundle);
    } else if (m == n - 1) {
      r.cells.push_back(RasterCell::OneLoss);
    } else if (m == n - 2) {
      r.cells.push_back(RasterCell::TwoLoss);
    } else {
      r.cells.push_back(RasterCell::Other);
    }
  }
  return r;
}

}  // namespace bundlesim::stats
