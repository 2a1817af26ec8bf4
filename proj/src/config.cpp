#include "bundlesim/config.hpp"

#include "bundlesim/errors.hpp"
#include "bundlesim/fingerprint.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace bundlesim::config {

namespace {

using KeyLines = std::map<std::string, int>;  // "section.key" -> line

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Located {
  std::string origin;
  int line = 0;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(fmt::format("{}:{}: key '{}': {}", origin, line, key, what));
  }
};

double to_double(const std::string& v, const Located& at) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) at.fail(fmt::format("'{}' is not a number", v));
  return x;
}

long long to_integer(const std::string& v, const Located& at) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) at.fail(fmt::format("'{}' is not an integer", v));
  return x;
}

bool to_bool(const std::string& v, const Located& at) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  at.fail(fmt::format("'{}' is not a boolean", v));
}

std::vector<std::string> to_list(std::string v) {
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
  return v;
}

using Setter = std::function<void(RunConfig&, const std::string&, const Located&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"system.n_emitters", [](RunConfig& c, const std::string& v, const Located& at) {
         c.system.n_emitters = static_cast<int>(to_integer(v, at));
       }},
      {"system.spacing", [](RunConfig& c, const std::string& v, const Located& at) { c.system.spacing = to_double(v, at); }},
      {"system.positions", [](RunConfig& c, const std::string& v, const Located& at) {
         c.system.positions.clear();
         for (const auto& s : to_list(v)) c.system.positions.push_back(to_double(s, at));
       }},
      {"system.gamma_1d", [](RunConfig& c, const std::string& v, const Located& at) { c.system.gamma_1d = to_double(v, at); }},
      {"system.gamma", [](RunConfig& c, const std::string& v, const Located& at) { c.system.gamma = to_double(v, at); }},
      {"system.gamma_f", [](RunConfig& c, const std::string& v, const Located& at) { c.system.gamma_f = to_double(v, at); }},
      {"system.pumped", [](RunConfig& c, const std::string& v, const Located& at) {
         c.system.pumped.clear();
         for (const auto& s : to_list(v)) c.system.pumped.push_back(static_cast<int>(to_integer(s, at)));
       }},
      {"system.free_space", [](RunConfig& c, const std::string& v, const Located& at) {
         const auto m = model::free_space_model_from_string(unquote(v));
         if (!m) at.fail(fmt::format("'{}' is not one of collective, independent", v));
         c.system.free_space = *m;
       }},
      {"pump.nbar", [](RunConfig& c, const std::string& v, const Located& at) { c.pump.nbar = to_double(v, at); }},
      {"pump.delta", [](RunConfig& c, const std::string& v, const Located& at) { c.pump.delta = to_double(v, at); }},
      {"pump.first_peak", [](RunConfig& c, const std::string& v, const Located& at) { c.pump.first_peak = to_double(v, at); }},
      {"pump.period", [](RunConfig& c, const std::string& v, const Located& at) { c.pump.period = to_double(v, at); }},
      {"pump.repetitions", [](RunConfig& c, const std::string& v, const Located& at) {
         c.pump.repetitions = static_cast<int>(to_integer(v, at));
       }},
      {"pump.calibrate", [](RunConfig& c, const std::string& v, const Located& at) { c.pump.calibrate = to_bool(v, at); }},
      {"pump.normalization", [](RunConfig& c, const std::string& v, const Located& at) {
         const auto n = model::pulse_normalization_from_string(unquote(v));
         if (!n) at.fail(fmt::format("'{}' is not one of unit_area, root_inside", v));
         c.pump.normalization = *n;
       }},
      {"pump.mode", [](RunConfig& c, const std::string& v, const Located& at) {
         const auto s = unquote(v);
         if (s == "coherent") {
           c.pump.mode = model::PumpMode::Coherent;
         } else if (s == "ideal") {
           c.pump.mode = model::PumpMode::Ideal;
         } else {
           at.fail(fmt::format("'{}' is not one of coherent, ideal", v));
         }
       }},
      {"pump.phase", [](RunConfig& c, const std::string& v, const Located& at) { c.pump.phase = to_double(v, at); }},
      {"run.t_start", [](RunConfig& c, const std::string& v, const Located& at) { c.run.t_start = to_double(v, at); }},
      {"run.t_end", [](RunConfig& c, const std::string& v, const Located& at) { c.run.t_end = to_double(v, at); }},
      {"run.dt_pulse", [](RunConfig& c, const std::string& v, const Located& at) { c.run.dt_pulse = to_double(v, at); }},
      {"run.dt_free", [](RunConfig& c, const std::string& v, const Located& at) { c.run.dt_free = to_double(v, at); }},
      {"run.sample_every", [](RunConfig& c, const std::string& v, const Located& at) {
         c.run.sample_every = static_cast<int>(to_integer(v, at));
       }},
      {"run.n_trajectories", [](RunConfig& c, const std::string& v, const Located& at) {
         const auto n = to_integer(v, at);
         if (n < 1) at.fail("must be >= 1");
         c.run.n_trajectories = static_cast<std::size_t>(n);
       }},
      {"run.master_seed", [](RunConfig& c, const std::string& v, const Located& at) {
         const auto n = to_integer(v, at);
         if (n < 0) at.fail("must be >= 0");
         c.run.master_seed = static_cast<std::uint64_t>(n);
       }},
      {"run.snapshot_times", [](RunConfig& c, const std::string& v, const Located& at) {
         c.run.snapshot_times.clear();
         for (const auto& s : to_list(v)) c.run.snapshot_times.push_back(to_double(s, at));
       }},
      {"run.no_jump", [](RunConfig& c, const std::string& v, const Located& at) {
         const auto s = unquote(v);
         if (s == "renormalize") {
           c.run.no_jump = trajectories::NoJumpNormalization::Renormalize;
         } else if (s == "divisor") {
           c.run.no_jump = trajectories::NoJumpNormalization::Divisor;
         } else {
           at.fail(fmt::format("'{}' is not one of renormalize, divisor", v));
         }
       }},
      {"stats.bundle_size", [](RunConfig& c, const std::string& v, const Located& at) {
         c.stats.bundle_size = static_cast<int>(to_integer(v, at));
       }},
      {"stats.max_lag", [](RunConfig& c, const std::string& v, const Located& at) {
         c.stats.max_lag = static_cast<int>(to_integer(v, at));
       }},
      {"stats.interval_bin", [](RunConfig& c, const std::string& v, const Located& at) {
         c.stats.interval_bin = to_double(v, at);
       }},
      {"stats.intensity_bin", [](RunConfig& c, const std::string& v, const Located& at) {
         c.stats.intensity_bin = to_double(v, at);
       }},
      {"stats.raster_trajectories", [](RunConfig& c, const std::string& v, const Located& at) {
         const auto n = to_integer(v, at);
         if (n < 0) at.fail("must be >= 0");
         c.stats.raster_trajectories = static_cast<std::size_t>(n);
       }},
      {"output.directory", [](RunConfig& c, const std::string& v, const Located&) { c.output.directory = unquote(v); }},
      {"output.formats", [](RunConfig& c, const std::string& v, const Located& at) {
         c.output.csv = c.output.json = false;
         for (const auto& f : to_list(v)) {
           if (f == "csv") {
             c.output.csv = true;
           } else if (f == "json") {
             c.output.json = true;
           } else {
             at.fail(fmt::format("unknown format '{}' (expected csv, json)", f));
           }
         }
       }},
      {"output.plots", [](RunConfig& c, const std::string& v, const Located& at) { c.output.plots = to_bool(v, at); }},
  };
  return table;
}

void check(const RunConfig& c, const std::string& origin, const KeyLines& lines) {
  auto fail = [&](const std::string& key, const std::string& what) {
    const auto it = lines.find(key);
    if (it != lines.end()) throw ConfigError(fmt::format("{}:{}: key '{}': {}", origin, it->second, key, what));
    throw ConfigError(fmt::format("{}: key '{}': {}", origin, key, what));
  };
  const auto& s = c.system;
  if (s.n_emitters < 1) fail("system.n_emitters", "must be >= 1");
  if (s.n_emitters > hilbert::kMaxEmitters) {
    fail("system.n_emitters", fmt::format("exceeds the capacity of {} emitters", hilbert::kMaxEmitters));
  }
  if (!s.positions.empty() && s.positions.size() != static_cast<std::size_t>(s.n_emitters)) {
    fail("system.positions", fmt::format("{} positions for {} emitters", s.positions.size(), s.n_emitters));
  }
  if (!std::isfinite(s.spacing)) fail("system.spacing", "must be finite");
  const std::pair<const char*, double> rates[] = {
      {"system.gamma_1d", s.gamma_1d}, {"system.gamma", s.gamma}, {"system.gamma_f", s.gamma_f}};
  for (const auto& [key, v] : rates) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(key, fmt::format("rate must be >= 0, got {}", v));
  }
  for (int j : s.pumped) {
    if (j < 1 || j > s.n_emitters) {
      fail("system.pumped", fmt::format("emitter {} out of range [1, {}]", j, s.n_emitters));
    }
  }
  const auto& p = c.pump;
  if (!(p.nbar > 0.0)) fail("pump.nbar", "must be > 0");
  if (!(p.delta > 0.0)) fail("pump.delta", "must be > 0");
  if (!(p.period > 0.0)) fail("pump.period", "must be > 0");
  if (p.repetitions < 1) fail("pump.repetitions", "must be >= 1");
  if (p.repetitions > 1 && !(p.period > 10.0 * 5.0 / p.delta)) {
    fail("pump.period", fmt::format("must exceed 10x the pulse support 5/delta = {}", 5.0 / p.delta));
  }
  const auto& r = c.run;
  const double last_pulse_end = p.first_peak + (p.repetitions - 1) * p.period + 5.0 / p.delta;
  if (!(c.t_end() > r.t_start)) fail("run.t_end", "must exceed run.t_start");
  if (c.t_end() < last_pulse_end - 1e-12) {
    fail("run.t_end", fmt::format("{} ends before the last pulse ({}); check pump.period and pump.repetitions",
                                  c.t_end(), last_pulse_end));
  }
  if (p.first_peak - 5.0 / p.delta < r.t_start - 1e-12) fail("pump.first_peak", "pulse starts before run.t_start");
  if (!(r.dt_pulse > 0.0)) fail("run.dt_pulse", "must be > 0");
  if (r.dt_pulse > 1.0 / (10.0 * p.delta) * (1 + 1e-12)) {
    fail("run.dt_pulse", fmt::format("must be <= 1/(10 delta) = {}", 1.0 / (10.0 * p.delta)));
  }
  const auto sc = c.system_config();
  const double dt_free_max = master::IntegrationPlan::max_dt_free(static_cast<int>(sc.pumped.size()));
  if (r.dt_free && (!(*r.dt_free > 0.0) || *r.dt_free > dt_free_max * (1 + 1e-12))) {
    fail("run.dt_free", fmt::format("must be in (0, {}]", dt_free_max));
  }
  if (r.sample_every < 1) fail("run.sample_every", "must be >= 1");
  for (double t : r.snapshot_times) {
    if (t < r.t_start || t > c.t_end()) fail("run.snapshot_times", fmt::format("{} outside the run span", t));
  }
  const auto& st = c.stats;
  if (st.bundle_size && *st.bundle_size < 1) fail("stats.bundle_size", "must be >= 1");
  if (st.max_lag < 0) fail("stats.max_lag", "must be >= 0");
  if (!(st.interval_bin > 0.0)) fail("stats.interval_bin", "must be > 0");
  if (!(st.intensity_bin > 0.0)) fail("stats.intensity_bin", "must be > 0");
  if (c.output.directory.empty()) fail("output.directory", "must not be empty");
}

}  // namespace

model::SystemConfig RunConfig::system_config() const {
  std::vector<int> pumped = system.pumped;
  if (pumped.empty()) {
    for (int j = 1; j <= system.n_emitters; ++j) pumped.push_back(j);
  }
  auto cfg = model::SystemConfig::uniform(system.n_emitters, system.spacing, pumped);
  if (!system.positions.empty()) cfg.positions = system.positions;
  cfg.gamma_1d = system.gamma_1d;
  cfg.gamma = system.gamma;
  cfg.gamma_f = system.gamma_f;
  cfg.free_space = system.free_space;
  return cfg;
}

model::PulseTrain RunConfig::pulse_train(std::optional<double> nbar_override) const {
  auto train = model::PulseTrain::for_pumped(system_config(), nbar_override.value_or(pump.nbar), pump.delta,
                                             pump.first_peak, pump.period, pump.repetitions);
  train.mode = pump.mode;
  for (auto& p : train.base) {
    p.normalization = pump.normalization;
    p.phase = pump.phase;
  }
  return train;
}

double RunConfig::t_end() const {
  if (run.t_end) return *run.t_end;
  return pump.first_peak - 5.0 / pump.delta + pump.repetitions * pump.period;
}

master::IntegrationPlan RunConfig::plan() const {
  master::IntegrationPlan plan;
  plan.t_start = run.t_start;
  plan.t_end = t_end();
  plan.dt_pulse = run.dt_pulse;
  plan.dt_free = run.dt_free.value_or(
      master::IntegrationPlan::max_dt_free(static_cast<int>(system_config().pumped.size())));
  plan.sample_every = run.sample_every;
  plan.sample_times = run.snapshot_times;
  return plan;
}

int RunConfig::bundle_size() const {
  return stats.bundle_size.value_or(static_cast<int>(system_config().pumped.size()));
}

void RunConfig::validate() const { check(*this, "<config>", {}); }

std::string RunConfig::canonical_text() const {
  return fmt::format(
      "{}|{}|pump calibrate={} nbar={}|run seed={} n_traj={} every={} no_jump={}|stats n={} lag={} ibin={} "
      "nbin={} raster={}",
      bundlesim::canonical_text(system_config()), bundlesim::canonical_text(pulse_train()), pump.calibrate, pump.nbar,
      run.master_seed, run.n_trajectories, run.sample_every,
      run.no_jump == trajectories::NoJumpNormalization::Renormalize ? "renormalize" : "divisor", bundle_size(),
      stats.max_lag, stats.interval_bin, stats.intensity_bin, stats.raster_trajectories) +
         "|" + bundlesim::canonical_text(plan());
}

std::uint64_t RunConfig::fingerprint() const { return fnv1a(canonical_text()); }

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  KeyLines lines;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  static const char* kSections[] = {"system", "pump", "run", "stats", "output"};
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections)) {
        throw ConfigError(fmt::format("{}:{}: unknown section [{}]", origin, line_no, section));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value', got '{}'", origin, line_no, line));
    }
    if (section.empty()) {
      throw ConfigError(fmt::format("{}:{}: key outside of any [section]", origin, line_no));
    }
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Located at{origin, line_no, key};
    const auto it = setters().find(key);
    if (it == setters().end()) at.fail("unknown key");
    if (lines.count(key)) at.fail(fmt::format("duplicate (first set on line {})", lines[key]));
    if (value.empty()) at.fail("missing value");
    it->second(cfg, value, at);
    lines[key] = line_no;
  }
  check(cfg, origin, lines);
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

}  // namespace bundlesim::config
