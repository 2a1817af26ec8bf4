#include "bundlesim/cli.hpp"

#include "bundlesim/errors.hpp"
#include "bundlesim/fingerprint.hpp"
#include "bundlesim/io.hpp"
#include "bundlesim/stats.hpp"
#include "bundlesim/svg.hpp"
#include "bundlesim/trajectories.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <thread>

namespace bundlesim::cli {

namespace {

using json = nlohmann::ordered_json;
using hilbert::LevelIndex;
using hilbert::OperatorMatrix;
using hilbert::StateVector;
namespace fs = std::filesystem;

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string letters(char c, std::size_t n) { return std::string(n, c); }

std::string figure_comment(const Context& ctx, std::uint64_t fp) {
  std::string s = "bundlesim config_fingerprint=" + fingerprint_hex(fp);
  if (!ctx.deterministic) s += " generated " + utc_timestamp();
  return s;
}

void write_json(const fs::path& path, json doc, const Context& ctx, std::uint64_t fp) {
  json out;
  out["config_fingerprint"] = fingerprint_hex(fp);
  if (!ctx.deterministic) out["generated_at"] = utc_timestamp();
  for (auto& [k, v] : doc.items()) out[k] = v;
  io::write_text(path, out.dump(2) + "\n");
}

void write_figure(const fs::path& path, svg::Figure fig, const Context& ctx, std::uint64_t fp) {
  fig.comment = figure_comment(ctx, fp);
  io::write_text(path, svg::render(fig));
}

master::TimeSeries run_master(const config::RunConfig& cfg, double nbar) {
  const auto sys = cfg.system_config();
  const auto train = cfg.pulse_train(nbar);
  auto rho0 = hilbert::DensityMatrix::pure(StateVector::ground(sys.n_emitters));
  return master::evolve(rho0, cfg.plan(), population_observables(sys), sys, train);
}

trajectories::EnsembleRecord run_mc(const config::RunConfig& cfg, double nbar, const Context& ctx,
                                    bool snapshots = false) {
  trajectories::McOptions opt;
  opt.no_jump = cfg.run.no_jump;
  opt.record_snapshots = snapshots;
  const auto sys = cfg.system_config();
  auto ens = trajectories::run_ensemble(sys, cfg.pulse_train(nbar), cfg.run.master_seed, cfg.run.n_trajectories,
                                        cfg.plan(), opt, ctx.workers);
  ens.fingerprint = cfg.fingerprint();
  return ens;
}

io::Table series_table(const master::TimeSeries& ts) {
  std::vector<std::string> cols{"time"};
  cols.insert(cols.end(), ts.labels.begin(), ts.labels.end());
  io::Table t(cols);
  for (std::size_t i = 0; i < ts.times.size(); ++i) {
    std::vector<std::string> row{io::cell(ts.times[i])};
    for (double v : ts.values[i]) row.push_back(io::cell(v));
    t.add(std::move(row));
  }
  return t;
}

svg::Panel population_panel(const master::TimeSeries& ts, const std::string& title, double t_max) {
  svg::Panel p{title, "time (1/Gamma_1D)", "population", {}, std::pair{ts.times.front(), t_max}, std::pair{0.0, 1.0}, {}};
  std::size_t color = 0;
  for (const auto& label : ts.labels) {
    if (label.rfind("P_", 0) != 0) continue;
    std::vector<double> x, y;
    const auto col = ts.column(label);
    for (std::size_t i = 0; i < ts.times.size() && ts.times[i] <= t_max; ++i) {
      x.push_back(ts.times[i]);
      y.push_back(col[i]);
    }
    p.series.push_back({label.substr(2), x, y, svg::palette(color++), svg::Style::Line, {}, {}});
  }
  return p;
}

svg::Panel distribution_panel(const stats::PhotonNumberDistribution& d, int n, const std::string& title) {
  svg::Series bars{"", {}, {}, svg::palette(0), svg::Style::Bars, {}, {}};
  for (int m = 0; m <= std::max(n, d.probability.empty() ? 0 : d.probability.rbegin()->first); ++m) {
    bars.x.push_back(m);
    bars.y.push_back(d.at(m));
  }
  svg::Panel p{title, "waveguide photons per pulse", "probability", {bars}, std::pair{-0.6, bars.x.back() + 0.6},
               std::pair{0.0, 1.0}, {}};
  for (int m = n; m >= 0; --m) p.notes.push_back(fmt::format("P({}) = {:.4f}", m, d.at(m)));
  return p;
}

json distribution_json(const stats::PhotonNumberDistribution& d) {
  json probs = json::object(), errs = json::object();
  for (const auto& [m, p] : d.probability) {
    probs[std::to_string(m)] = p;
    errs[std::to_string(m)] = d.std_error.at(m);
  }
  return json{{"samples", d.samples}, {"mean", d.mean()}, {"probability", probs}, {"std_error", errs}};
}

stats::WindowScheme windows_for(const config::RunConfig& cfg) { return stats::WindowScheme::for_train(cfg.pulse_train()); }

io::Table interval_table(const stats::IntervalHistogram& h) {
  io::Table t({"bin_start", "bin_end", "count"});
  for (std::size_t k = 0; k < h.bins.size(); ++k) {
    t.add({io::cell(static_cast<double>(k) * h.bin_width), io::cell(static_cast<double>(k + 1) * h.bin_width),
           io::cell(h.bins[k])});
  }
  return t;
}

svg::Panel interval_panel(const stats::IntervalHistogram& h, const std::string& title) {
  svg::Series bars{"", {}, {}, svg::palette(1), svg::Style::Bars, {}, {}};
  for (std::size_t k = 0; k < h.bins.size(); ++k) {
    bars.x.push_back((static_cast<double>(k) + 0.5) * h.bin_width);
    bars.y.push_back(static_cast<double>(h.bins[k]));
  }
  svg::Panel p{title, "gap between successive photons (1/Gamma_1D)", "counts", {bars}, std::nullopt, std::nullopt, {}};
  p.notes.push_back(fmt::format("{} events", h.events));
  p.notes.push_back(fmt::format("median gap {:.3f}", h.median()));
  return p;
}

std::vector<int> lags_for(const config::RunConfig& cfg, std::size_t n_windows) {
  std::vector<int> lags;
  for (int k = 0; k <= cfg.stats.max_lag && static_cast<std::size_t>(k) < n_windows; ++k) lags.push_back(k);
  return lags;
}

io::Table g2_table(const stats::CorrelationSeries& g) {
  io::Table t({"lag", "g_n2", "std_error"});
  for (std::size_t i = 0; i < g.lags.size(); ++i) t.add({io::cell(g.lags[i]), io::cell(g.estimates[i]), io::cell(g.std_errors[i])});
  return t;
}

svg::Panel g2_panel(const stats::CorrelationSeries& g, const std::string& title) {
  svg::Series s{"", {}, {}, svg::palette(0), svg::Style::Markers, {}, {}};
  for (std::size_t i = 0; i < g.lags.size(); ++i) {
    s.x.push_back(g.lags[i]);
    s.y.push_back(std::isfinite(g.estimates[i]) ? g.estimates[i] : 0.0);
    s.y_error.push_back(std::isfinite(g.std_errors[i]) ? g.std_errors[i] : 0.0);
  }
  const double top = std::max(1.3, *std::max_element(s.y.begin(), s.y.end()) + 0.1);
  return {title, "lag (pulses)", fmt::format("g_{}^2", g.order), {s}, std::pair{-0.5, g.lags.back() + 0.5},
          std::pair{0.0, top}, {}};
}

const std::string& raster_color(stats::RasterCell c) {
  static const std::string black = "#000000", red = "#d62728", green = "#2ca02c", grey = "#999999";
  switch (c) {
    case stats::RasterCell::FullBundle: return black;
    case stats::RasterCell::OneLoss: return red;
    case stats::RasterCell::TwoLoss: return green;
    default: return grey;
  }
}

io::Table raster_table(const stats::ClickRaster& r) {
  io::Table t({"trajectory", "window", "cell"});
  for (std::size_t i = 0; i < r.n_trajectories; ++i) {
    for (std::size_t w = 0; w < r.n_windows; ++w) t.add({io::cell(i), io::cell(w), std::string(stats::to_string(r.at(i, w)))});
  }
  return t;
}

svg::Panel raster_panel(const stats::ClickRaster& r, const std::string& title) {
  svg::Series s{"", {}, {}, "#000000", svg::Style::Markers, {}, {}};
  for (std::size_t i = 0; i < r.n_trajectories; ++i) {
    for (std::size_t w = 0; w < r.n_windows; ++w) {
      s.x.push_back(static_cast<double>(w + 1));
      s.y.push_back(static_cast<double>(i + 1));
      s.point_colors.push_back(raster_color(r.at(i, w)));
    }
  }
  svg::Panel p{title, "pulse", "trajectory", {s}, std::pair{0.3, r.n_windows + 0.7},
               std::pair{0.3, r.n_trajectories + 0.7}, {}};
  p.notes.push_back("black full, red -1, green -2");
  return p;
}

trajectories::EnsembleRecord head(const trajectories::EnsembleRecord& ens, std::size_t k) {
  trajectories::EnsembleRecord out = ens;
  out.records.resize(std::min(k, ens.records.size()));
  return out;
}

io::Table intensity_table(const stats::IntensitySeries& s) {
  io::Table t({"time", "rate"});
  for (std::size_t k = 0; k < s.rate.size(); ++k) t.add({io::cell(s.bin_center(k)), io::cell(s.rate[k])});
  return t;
}

void announce_pump(const PumpSetting& pump) {
  if (!pump.calibration) return;
  log_line(fmt::format("calibrated nbar = {:.1f} (peak fidelity {:.4f}, {} evaluations)", pump.nbar,
                       pump.calibration->fidelity, pump.calibration->evaluations));
  for (const auto& w : pump.calibration->warnings) log_line("warning: " + w);
}

StateVector minus_state(int n, int a, int b) {
  std::vector<LevelIndex> levels(static_cast<std::size_t>(n), LevelIndex::g);
  levels[static_cast<std::size_t>(a - 1)] = LevelIndex::e;
  levels[static_cast<std::size_t>(b - 1)] = LevelIndex::f;
  auto ef = StateVector::basis_state(levels);
  std::swap(levels[static_cast<std::size_t>(a - 1)], levels[static_cast<std::size_t>(b - 1)]);
  auto fe = StateVector::basis_state(levels);
  return StateVector(n, (ef.amplitudes() - fe.amplitudes()) / std::sqrt(2.0));
}

}  // namespace

config::RunConfig reference_preset(int n_emitters, int repetitions) {
  config::RunConfig cfg;
  cfg.system.n_emitters = n_emitters;
  cfg.pump.repetitions = repetitions;
  cfg.pump.calibrate = true;
  cfg.validate();
  return cfg;
}

PumpSetting resolve_pump(const config::RunConfig& cfg) {
  PumpSetting out{cfg.pump.nbar, std::nullopt};
  if (cfg.pump.calibrate && cfg.pump.mode == model::PumpMode::Coherent) {
    out.calibration = calibration::calibrate_pi_pulse(cfg.system_config(), cfg.pump.delta, cfg.pump.normalization);
    out.nbar = out.calibration->nbar;
  }
  return out;
}

master::ObservableSet population_observables(const model::SystemConfig& cfg) {
  const int n = cfg.n_emitters;
  const auto& pumped = cfg.pumped;
  const auto np = pumped.size();
  const auto dim = hilbert::basis_dim(n);
  master::ObservableSet obs;
  obs.add("P_" + letters('e', np), OperatorMatrix::projector(model::excited_state(n, pumped)));
  if (np == 2) {
    obs.add("P_plus", OperatorMatrix::projector(model::symmetric_state(n, pumped, 1)));
    obs.add("P_minus", OperatorMatrix::projector(minus_state(n, pumped[0], pumped[1])));
  } else {
    for (int m = static_cast<int>(np) - 1; m >= 1; --m) {
      obs.add(fmt::format("P_S{}", m), OperatorMatrix::projector(model::symmetric_state(n, pumped, m)));
    }
  }
  obs.add("P_" + letters('f', np), OperatorMatrix::projector(model::symmetric_state(n, pumped, 0)));
  obs.add("P_" + letters('g', np), OperatorMatrix::projector(dim, 0));
  auto excited = OperatorMatrix::zero(dim);
  for (int j : pumped) excited = excited + hilbert::transition_operator(j, LevelIndex::e, LevelIndex::e, n);
  obs.add("excited_fraction", (1.0 / static_cast<double>(std::max<std::size_t>(np, 1))) * excited);
  obs.add("intensity", model::waveguide_rate_operator(cfg));
  return obs;
}

int cmd_spectrum(const config::RunConfig& cfg, const Context& ctx) {
  const auto sys = cfg.system_config();
  const int n = sys.n_emitters;
  const auto modes = model::collective_spectrum(sys, n);
  std::vector<std::string> cols{"m", "energy_shift", "amp_decay"};
  std::vector<std::size_t> basis;
  for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
    std::vector<LevelIndex> levels;
    std::string name;
    for (int j = 0; j < n; ++j) {
      const bool e = (bits >> j) & 1u;
      levels.push_back(e ? LevelIndex::e : LevelIndex::f);
      name += e ? 'e' : 'f';
    }
    basis.push_back(hilbert::basis_index(levels));
    cols.push_back("re_" + name);
    cols.push_back("im_" + name);
  }
  io::Table t(cols);
  for (const auto& mode : modes) {
    std::vector<std::string> row{io::cell(mode.excitation_number), io::cell(mode.energy_shift), io::cell(mode.amp_decay)};
    for (auto b : basis) {
      row.push_back(io::cell(mode.state[b].real()));
      row.push_back(io::cell(mode.state[b].imag()));
    }
    t.add(std::move(row));
  }
  const auto fp = cfg.fingerprint();
  io::write_table(ctx.out_dir / "spectrum.csv", t, fp);
  log_line(fmt::format("wrote {} modes to {}", modes.size(), (ctx.out_dir / "spectrum.csv").string()));
  return 0;
}

int cmd_master(const config::RunConfig& cfg, const Context& ctx) {
  const auto pump = resolve_pump(cfg);
  announce_pump(pump);
  const Stopwatch clock;
  const auto ts = run_master(cfg, pump.nbar);
  const auto fp = cfg.fingerprint();
  if (cfg.output.csv) io::write_table(ctx.out_dir / "master.csv", series_table(ts), fp);
  if (cfg.output.json) {
    json doc{{"nbar", pump.nbar}, {"samples", ts.times.size()}};
    for (const auto& label : ts.labels) {
      const auto col = ts.column(label);
      const auto it = std::max_element(col.begin(), col.end());
      doc["peaks"][label] = {{"value", *it}, {"time", ts.times[static_cast<std::size_t>(it - col.begin())]}};
    }
    if (pump.calibration) doc["pump_fidelity"] = pump.calibration->fidelity;
    if (!ctx.deterministic) doc["elapsed_seconds"] = clock.seconds();
    write_json(ctx.out_dir / "master.json", doc, ctx, fp);
  }
  if (cfg.output.plots) {
    svg::Figure fig;
    const double t_max = std::min(ts.times.back(), cfg.pump.first_peak + 6.0);
    fig.panels.push_back(population_panel(ts, "populations", t_max));
    const auto intensity = ts.column("intensity");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < ts.times.size() && ts.times[i] <= t_max; ++i) {
      x.push_back(ts.times[i]);
      y.push_back(intensity[i]);
    }
    fig.panels.push_back({"waveguide intensity", "time (1/Gamma_1D)", "rate (Gamma_1D)",
                          {{"", x, y, svg::palette(0), svg::Style::Line, {}, {}}}, std::nullopt, std::nullopt, {}});
    write_figure(ctx.out_dir / "master.svg", fig, ctx, fp);
  }
  log_line(fmt::format("master: {} samples to {}", ts.times.size(), ctx.out_dir.string()));
  return 0;
}

int cmd_trajectories(const config::RunConfig& cfg, const Context& ctx) {
  const auto pump = resolve_pump(cfg);
  announce_pump(pump);
  const bool snapshots = !cfg.run.snapshot_times.empty();
  const Stopwatch clock;
  const auto ens = run_mc(cfg, pump.nbar, ctx, snapshots);
  const auto fp = ens.fingerprint;
  io::write_click_log(ctx.out_dir / "clicks.log", ens, fp);
  if (snapshots && cfg.output.csv) {
    const auto sys = cfg.system_config();
    const auto obs = population_observables(sys);
    const auto rhos = trajectories::reconstruct_density(ens, cfg.run.snapshot_times);
    std::vector<std::string> cols{"time"};
    for (const auto& [label, op] : obs.items()) cols.push_back(label);
    io::Table t(cols);
    for (std::size_t i = 0; i < rhos.size(); ++i) {
      std::vector<std::string> row{io::cell(cfg.run.snapshot_times[i])};
      for (const auto& [label, op] : obs.items()) row.push_back(io::cell(hilbert::expectation(op, rhos[i]).real()));
      t.add(std::move(row));
    }
    io::write_table(ctx.out_dir / "snapshots.csv", t, fp);
  }
  if (cfg.output.json) {
    json counts;
    for (auto c : {trajectories::Channel::WaveguideRight, trajectories::Channel::WaveguideLeft,
                   trajectories::Channel::FreeSpaceE, trajectories::Channel::FreeSpaceF}) {
      std::size_t total = 0;
      for (const auto& r : ens.records) total += r.count(c);
      counts[std::string(trajectories::channel_tag(c))] = total;
    }
    json doc{{"n_trajectories", ens.records.size()}, {"master_seed", cfg.run.master_seed}, {"nbar", pump.nbar},
             {"t_start", ens.t_start}, {"t_end", ens.t_end}, {"clicks", counts}};
    if (!ctx.deterministic) {
      doc["elapsed_seconds"] = clock.seconds();
      doc["workers"] = ctx.workers;
    }
    write_json(ctx.out_dir / "trajectories.json", doc, ctx, fp);
  }
  log_line(fmt::format("trajectories: {} records to {}", ens.records.size(), ctx.out_dir.string()));
  return 0;
}

int cmd_stats(const config::RunConfig& cfg, const Context& ctx, const fs::path& log) {
  const auto ens = io::read_click_log(log);
  const auto fp = ens.fingerprint;
  if (fp != cfg.fingerprint()) {
    log_line(fmt::format("warning: click log fingerprint {} differs from the config ({})", fingerprint_hex(fp),
                         fingerprint_hex(cfg.fingerprint())));
  }
  const int n = cfg.bundle_size();
  const auto ws = windows_for(cfg);
  ws.validate(ens.t_start, ens.t_end);
  const auto wc = stats::count_per_window(ens, ws);
  const auto per_window = stats::photon_number_distribution(wc);
  const auto pooled = stats::pooled_distribution(wc);

  io::Table dist({"window", "m", "probability", "std_error"});
  auto add_rows = [&](const std::string& w, const stats::PhotonNumberDistribution& d) {
    for (const auto& [m, p] : d.probability) dist.add({w, io::cell(m), io::cell(p), io::cell(d.std_error.at(m))});
  };
  for (std::size_t w = 0; w < per_window.size(); ++w) add_rows(std::to_string(w), per_window[w]);
  add_rows("pooled", pooled);

  json doc{{"n_trajectories", wc.n_trajectories}, {"n_windows", wc.n_windows}, {"bundle_size", n},
           {"leakage_fraction", wc.leakage_fraction()}, {"distribution", distribution_json(pooled)}};
  svg::Figure fig;
  fig.panels.push_back(distribution_panel(pooled, n, "photon number per pulse"));

  if (cfg.output.csv) io::write_table(ctx.out_dir / "distribution.csv", dist, fp);
  if (n >= 2) {
    try {
      const auto h = stats::interval_histogram(ens, ws, n, cfg.stats.interval_bin);
      if (cfg.output.csv) io::write_table(ctx.out_dir / "intervals.csv", interval_table(h), fp);
      doc["intervals"] = {{"events", h.events}, {"median_gap", h.median()}};
      fig.panels.push_back(interval_panel(h, fmt::format("{}-photon intervals", n)));
    } catch (const NoDataError& e) {
      log_line(fmt::format("warning: no interval histogram: {}", e.what()));
    }
  }
  try {
    const auto g = stats::g_n2(wc, n, lags_for(cfg, wc.n_windows));
    if (cfg.output.csv) io::write_table(ctx.out_dir / "g2.csv", g2_table(g), fp);
    doc["g_n2"] = {{"lags", g.lags}, {"estimates", g.estimates}, {"std_errors", g.std_errors}};
    fig.panels.push_back(g2_panel(g, fmt::format("g_{}^2 over pulse lags", n)));
  } catch (const UndefinedEstimateError& e) {
    log_line(fmt::format("warning: no correlation estimate: {}", e.what()));
  }
  const auto intensity = stats::intensity_series(ens, cfg.stats.intensity_bin);
  if (cfg.output.csv) io::write_table(ctx.out_dir / "intensity.csv", intensity_table(intensity), fp);
  const auto raster = stats::click_raster(head(ens, cfg.stats.raster_trajectories), ws, n);
  if (cfg.output.csv) io::write_table(ctx.out_dir / "raster.csv", raster_table(raster), fp);
  fig.panels.push_back(raster_panel(raster, "click raster"));

  if (cfg.output.json) write_json(ctx.out_dir / "stats.json", doc, ctx, fp);
  if (cfg.output.plots) write_figure(ctx.out_dir / "stats.svg", fig, ctx, fp);
  log_line(fmt::format("stats: {} trajectories x {} windows, P({}) = {:.4f}", wc.n_trajectories, wc.n_windows, n,
                       pooled.at(n)));
  return 0;
}

namespace {

struct PresetRun {
  config::RunConfig cfg;
  PumpSetting pump;
  double pump_fidelity = 0.0;
};

PresetRun prepare_preset(int n, int reps, std::optional<std::uint64_t> seed, std::optional<std::size_t> n_traj) {
  PresetRun run{reference_preset(n, reps), {}, 0.0};
  if (seed) run.cfg.run.master_seed = *seed;
  if (n_traj) run.cfg.run.n_trajectories = *n_traj;
  run.pump = resolve_pump(run.cfg);
  run.pump_fidelity = calibration::pump_fidelity(run.cfg.system_config(), run.cfg.pulse_train(run.pump.nbar)).peak_population;
  log_line(fmt::format("n = {}: nbar = {:.1f}, pump fidelity {:.4f}", n, run.pump.nbar, run.pump_fidelity));
  return run;
}

std::uint64_t combined_fingerprint(const std::vector<PresetRun>& runs) {
  std::string text;
  for (const auto& r : runs) text += r.cfg.canonical_text() + ";";
  return fnv1a(text);
}

int reproduce_fig2(const Context& ctx, std::optional<std::uint64_t> seed, std::optional<std::size_t> n_traj) {
  std::vector<PresetRun> runs;
  for (int n = 1; n <= 3; ++n) runs.push_back(prepare_preset(n, 1, seed, n_traj));
  const auto fp = combined_fingerprint(runs);
  json summary{{"n_trajectories", runs.front().cfg.run.n_trajectories}, {"master_seed", runs.front().cfg.run.master_seed}};
  svg::Figure fig;
  for (auto& r : runs) {
    const int n = r.cfg.system.n_emitters;
    const auto ts = run_master(r.cfg, r.pump.nbar);
    io::write_table(ctx.out_dir / fmt::format("fig2_master_n{}.csv", n), series_table(ts), fp);
    const auto ens = run_mc(r.cfg, r.pump.nbar, ctx);
    const auto wc = stats::count_per_window(ens, windows_for(r.cfg));
    const auto d = stats::pooled_distribution(wc);
    io::Table t({"m", "probability", "std_error"});
    for (const auto& [m, p] : d.probability) t.add({io::cell(m), io::cell(p), io::cell(d.std_error.at(m))});
    io::write_table(ctx.out_dir / fmt::format("fig2_distribution_n{}.csv", n), t, fp);
    summary["emitters"][std::to_string(n)] = {{"nbar", r.pump.nbar},
                                              {"pump_fidelity", r.pump_fidelity},
                                              {"bundle_probability", d.at(n)},
                                              {"loss_probability", 1.0 - d.at(n)},
                                              {"leakage_fraction", wc.leakage_fraction()},
                                              {"distribution", distribution_json(d)}};
    fig.panels.push_back(population_panel(ts, fmt::format("{} emitter{} excited", n, n > 1 ? "s" : ""),
                                          r.cfg.pump.first_peak + 4.0));
    fig.panels.push_back(distribution_panel(d, n, fmt::format("photon number, n = {}", n)));
    log_line(fmt::format("n = {}: P({}) = {:.4f}", n, n, d.at(n)));
  }
  write_json(ctx.out_dir / "fig2_summary.json", summary, ctx, fp);
  write_figure(ctx.out_dir / "fig2.svg", fig, ctx, fp);
  return 0;
}

int reproduce_fig3(const Context& ctx, std::optional<std::uint64_t> seed, std::optional<std::size_t> n_traj) {
  std::vector<PresetRun> runs;
  for (int n = 1; n <= 3; ++n) runs.push_back(prepare_preset(n, 1, seed, n_traj));
  const auto fp = combined_fingerprint(runs);
  json summary{{"n_trajectories", runs.front().cfg.run.n_trajectories}};
  svg::Panel decay{"excited fraction", "time (1/Gamma_1D)", "mean excitation per emitter", {}, std::pair{0.0, 4.0},
                   std::pair{0.0, 1.0}, {}};
  svg::Panel glow{"waveguide intensity", "time (1/Gamma_1D)", "rate (Gamma_1D)", {}, std::pair{0.0, 4.0}, std::nullopt, {}};
  std::vector<svg::Panel> histograms;
  io::Table decay_table({"n", "time", "excited_fraction", "intensity"});
  for (auto& r : runs) {
    const int n = r.cfg.system.n_emitters;
    const auto sys = r.cfg.system_config();
    // Prepared |e...e> with no drive isolates the collective decay.
    master::IntegrationPlan plan = r.cfg.plan();
    plan.t_start = 0.0;
    plan.t_end = 6.0;
    const auto ts = master::evolve(hilbert::DensityMatrix::pure(model::excited_state(n, sys.pumped)), plan,
                                   population_observables(sys), sys, model::PulseTrain::none());
    const auto frac = ts.column("excited_fraction");
    const auto inten = ts.column("intensity");
    for (std::size_t i = 0; i < ts.times.size(); ++i) {
      decay_table.add({io::cell(n), io::cell(ts.times[i]), io::cell(frac[i]), io::cell(inten[i])});
    }
    double t_1e = ts.times.back();
    for (std::size_t i = 1; i < ts.times.size(); ++i) {
      if (frac[i] <= std::exp(-1.0)) {
        const double s = (frac[i - 1] - std::exp(-1.0)) / (frac[i - 1] - frac[i]);
        t_1e = ts.times[i - 1] + s * (ts.times[i] - ts.times[i - 1]);
        break;
      }
    }
    decay.series.push_back({fmt::format("n = {}", n), ts.times, frac, svg::palette(static_cast<std::size_t>(n - 1)),
                            svg::Style::Line, {}, {}});
    glow.series.push_back({fmt::format("n = {}", n), ts.times, inten, svg::palette(static_cast<std::size_t>(n - 1)),
                           svg::Style::Line, {}, {}});
    json entry{{"initial_intensity", inten.front()}, {"one_over_e_time", t_1e}, {"nbar", r.pump.nbar}};
    if (n >= 2) {
      const auto ens = run_mc(r.cfg, r.pump.nbar, ctx);
      const auto h = stats::interval_histogram(ens, windows_for(r.cfg), n, r.cfg.stats.interval_bin);
      io::write_table(ctx.out_dir / fmt::format("fig3_intervals_n{}.csv", n), interval_table(h), fp);
      entry["interval_events"] = h.events;
      entry["median_gap"] = h.median();
      histograms.push_back(interval_panel(h, fmt::format("{}-photon bundles", n)));
      log_line(fmt::format("n = {}: {} {}-photon events", n, h.events, n));
    }
    summary["emitters"][std::to_string(n)] = entry;
  }
  io::write_table(ctx.out_dir / "fig3_decay.csv", decay_table, fp);
  write_json(ctx.out_dir / "fig3_summary.json", summary, ctx, fp);
  svg::Figure fig;
  fig.panels = {decay, glow};
  fig.panels.insert(fig.panels.end(), histograms.begin(), histograms.end());
  write_figure(ctx.out_dir / "fig3.svg", fig, ctx, fp);
  return 0;
}

int reproduce_fig4(const Context& ctx, std::optional<std::uint64_t> seed, std::optional<std::size_t> n_traj) {
  std::vector<PresetRun> runs;
  for (int n = 1; n <= 3; ++n) runs.push_back(prepare_preset(n, 9, seed, n_traj));
  const auto fp = combined_fingerprint(runs);
  json summary{{"n_trajectories", runs.front().cfg.run.n_trajectories}, {"n_windows", 9}};
  svg::Figure fig;
  std::vector<svg::Panel> rasters;
  for (auto& r : runs) {
    const int n = r.cfg.system.n_emitters;
    const auto ens = run_mc(r.cfg, r.pump.nbar, ctx);
    const auto ws = windows_for(r.cfg);
    const auto wc = stats::count_per_window(ens, ws);
    const auto g = stats::g_n2(wc, n, lags_for(r.cfg, wc.n_windows));
    io::write_table(ctx.out_dir / fmt::format("fig4_g2_n{}.csv", n), g2_table(g), fp);
    const auto raster = stats::click_raster(head(ens, r.cfg.stats.raster_trajectories), ws, n);
    io::write_table(ctx.out_dir / fmt::format("fig4_raster_n{}.csv", n), raster_table(raster), fp);
    summary["emitters"][std::to_string(n)] = {
        {"nbar", r.pump.nbar},
        {"g_n2", {{"lags", g.lags}, {"estimates", g.estimates}, {"std_errors", g.std_errors}}},
        {"bundle_probability", stats::pooled_distribution(wc).at(n)},
        {"raster", {{"full", raster.tally(stats::RasterCell::FullBundle)},
                    {"loss1", raster.tally(stats::RasterCell::OneLoss)},
                    {"loss2", raster.tally(stats::RasterCell::TwoLoss)},
                    {"other", raster.tally(stats::RasterCell::Other)}}}};
    fig.panels.push_back(g2_panel(g, fmt::format("g_{}^2, n = {}", n, n)));
    rasters.push_back(raster_panel(raster, fmt::format("clicks, n = {}", n)));
    log_line(fmt::format("n = {}: g_{}^2(0) = {:.4f}", n, n, g.estimates.front()));
  }
  fig.columns = 3;
  fig.panels.insert(fig.panels.end(), rasters.begin(), rasters.end());
  write_json(ctx.out_dir / "fig4_summary.json", summary, ctx, fp);
  write_figure(ctx.out_dir / "fig4.svg", fig, ctx, fp);
  return 0;
}

}  // namespace

int cmd_reproduce(const std::string& figure, const Context& ctx, std::optional<std::uint64_t> seed,
                  std::optional<std::size_t> n_trajectories) {
  if (figure == "fig2") return reproduce_fig2(ctx, seed, n_trajectories);
  if (figure == "fig3") return reproduce_fig3(ctx, seed, n_trajectories);
  if (figure == "fig4") return reproduce_fig4(ctx, seed, n_trajectories);
  throw ConfigError(fmt::format("unknown figure '{}' (expected fig2, fig3 or fig4)", figure));
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Collective photon-bundle emission in waveguide QED"};
  app.require_subcommand(1);
  std::string config_path, out_dir, log_path, figure;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_traj;
  bool deterministic = false;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "Run configuration file");
    if (needs_config) opt->check(CLI::ExistingFile);
    sub->add_option("--workers", workers, "Worker threads for trajectory ensembles")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Override run.master_seed");
    sub->add_flag("--deterministic", deterministic, "Omit timestamps and timings from outputs");
    sub->add_option("--out", out_dir, "Output directory");
  };
  auto* spectrum = app.add_subcommand("spectrum", "Collective eigenmodes of the emitter array");
  auto* master_cmd = app.add_subcommand("master", "Master-equation time series");
  auto* traj = app.add_subcommand("trajectories", "Monte Carlo click log");
  auto* stats_cmd = app.add_subcommand("stats", "Photon statistics from a click log");
  auto* reproduce = app.add_subcommand("reproduce", "Preset pipelines for the three figures");
  for (auto* sub : {spectrum, master_cmd, traj, stats_cmd}) common(sub, true);
  common(reproduce, false);
  stats_cmd->add_option("--log", log_path, "Click log (default <out>/clicks.log)");
  reproduce->add_option("figure", figure, "fig2, fig3 or fig4")->required()->check(CLI::IsMember({"fig2", "fig3", "fig4"}));
  reproduce->add_option("--trajectories", n_traj, "Trajectories per emitter count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }

  try {
    config::RunConfig cfg;
    if (!config_path.empty()) cfg = config::parse_config(config_path);
    if (seed) cfg.run.master_seed = *seed;
    Context ctx;
    ctx.workers = workers;
    ctx.deterministic = deterministic;
    if (!out_dir.empty()) {
      ctx.out_dir = out_dir;
    } else if (const char* env = std::getenv(kOutputEnvVar); env && *env) {
      ctx.out_dir = env;
    } else {
      ctx.out_dir = cfg.output.directory;
    }
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", ctx.out_dir.string(), ec.message()));

    if (*spectrum) return cmd_spectrum(cfg, ctx);
    if (*master_cmd) return cmd_master(cfg, ctx);
    if (*traj) return cmd_trajectories(cfg, ctx);
    if (*stats_cmd) return cmd_stats(cfg, ctx, log_path.empty() ? ctx.out_dir / "clicks.log" : fs::path(log_path));
    return cmd_reproduce(figure, ctx, seed, n_traj);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Internal);
  }
}

}  // namespace bundlesim::cli
