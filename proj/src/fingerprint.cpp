#include "bundlesim/fingerprint.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace bundlesim {

std::string canonical_text(const model::SystemConfig& cfg) {
  return fmt::format("system n={} z=[{}] g1d={} g={} gf={} pumped=[{}] free_space={}", cfg.n_emitters,
                     fmt::join(cfg.positions, ","), cfg.gamma_1d, cfg.gamma, cfg.gamma_f,
                     fmt::join(cfg.pumped, ","), model::to_string(cfg.free_space));
}

std::string canonical_text(const model::PulseTrain& train) {
  std::string s = fmt::format("train period={} reps={} mode={}", train.period, train.repetitions,
                              train.mode == model::PumpMode::Coherent ? "coherent" : "ideal");
  for (const auto& p : train.base) {
    s += fmt::format(" pulse(target={} nbar={} delta={} t_peak={} phase={} norm={})", p.target, p.nbar, p.delta,
                     p.t_peak, p.phase, model::to_string(p.normalization));
  }
  return s;
}

std::string canonical_text(const master::IntegrationPlan& plan) {
  return fmt::format("plan t=[{},{}] dt_pulse={} dt_free={} every={} samples=[{}]", plan.t_start, plan.t_end,
                     plan.dt_pulse, plan.dt_free, plan.sample_every, fmt::join(plan.sample_times, ","));
}

std::string fingerprint_hex(std::uint64_t fp) { return fmt::format("{:016x}", fp); }

}  // namespace bundlesim
