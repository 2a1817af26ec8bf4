#include "bundlesim/trajectories.hpp"

#include "bundlesim/errors.hpp"
#include "bundlesim/fingerprint.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace bundlesim::trajectories {

using hilbert::DenseVector;
using hilbert::LevelIndex;
using hilbert::SparseMatrix;

std::string_view channel_tag(Channel c) {
  switch (c) {
    case Channel::WaveguideRight: return "R";
    case Channel::WaveguideLeft: return "L";
    case Channel::FreeSpaceE: return "E";
    case Channel::FreeSpaceF: return "F";
  }
  return "?";
}

std::optional<Channel> channel_from_tag(std::string_view tag) {
  if (tag == "R") return Channel::WaveguideRight;
  if (tag == "L") return Channel::WaveguideLeft;
  if (tag == "E") return Channel::FreeSpaceE;
  if (tag == "F") return Channel::FreeSpaceF;
  return std::nullopt;
}

std::size_t TrajectoryRecord::count(Channel c) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [c](const ClickEvent& e) { return e.channel == c; }));
}

std::size_t TrajectoryRecord::waveguide_clicks() const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [](const ClickEvent& e) { return is_waveguide(e.channel); }));
}

JumpEngine::JumpEngine(const SystemConfig& cfg, const PulseTrain& train, NoJumpNormalization no_jump)
    : cfg_(cfg), train_(train), no_jump_(no_jump) {
  cfg_.validate();
  train_.validate(cfg_);
  const auto jumps = model::jump_operators(cfg_);
  h_static_ = (model::exchange_hamiltonian(cfg_) - cplx(0.0, 0.5) * model::decay_operator(cfg_)).sparse();
  for (const auto& j : jumps.free_e) channels_.emplace_back(Channel::FreeSpaceE, j.sparse());
  channels_.emplace_back(Channel::WaveguideRight, jumps.right.sparse());
  channels_.emplace_back(Channel::WaveguideLeft, jumps.left.sparse());
  for (const auto& j : jumps.free_f) channels_.emplace_back(Channel::FreeSpaceF, j.sparse());

  const double g = std::sqrt(cfg_.gamma / 2.0);
  for (int j = 1; j <= cfg_.n_emitters; ++j) {
    SparseMatrix up = (cplx(g) * hilbert::transition_operator(j, LevelIndex::e, LevelIndex::g, cfg_.n_emitters)).sparse();
    lower_ge_.emplace_back(up.adjoint());
    raise_eg_.push_back(std::move(up));
    flips_.push_back(model::pi_flip(j, cfg_.n_emitters).sparse());
  }
}

JumpEngine::Workspace JumpEngine::workspace() const {
  const auto d = h_static_.rows();
  Workspace ws;
  ws.heff_psi = DenseVector::Zero(d);
  ws.jump_psi.assign(channels_.size(), DenseVector::Zero(d));
  ws.probabilities.assign(channels_.size(), 0.0);
  return ws;
}

JumpEngine::StepResult JumpEngine::step(DenseVector& psi, double t, double dt, double r, Workspace& ws) const {
  double p_total = 0.0;
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    ws.jump_psi[k].noalias() = channels_[k].second * psi;
    ws.probabilities[k] = dt * ws.jump_psi[k].squaredNorm();
    p_total += ws.probabilities[k];
  }
  if (!(p_total < 0.1)) {
    throw StepSizeError(fmt::format("total jump probability {:.4f} >= 0.1 at t={} (dt={})", p_total, t, dt));
  }

  StepResult result;
  double threshold = 0.0;
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    threshold += ws.probabilities[k];
    if (r < threshold) {
      psi = ws.jump_psi[k] / std::sqrt(ws.probabilities[k] / dt);
      result.jump = channels_[k].first;
      return result;
    }
  }

  ws.heff_psi.noalias() = h_static_ * psi;
  bool driven = false;
  if (train_.mode == model::PumpMode::Coherent && train_.driving_at(t)) {
    const auto alpha = train_.drive(cfg_.n_emitters, t);
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] == cplx{}) continue;
      driven = true;
      ws.heff_psi.noalias() += alpha[j] * (raise_eg_[j] * psi);
      ws.heff_psi.noalias() += std::conj(alpha[j]) * (lower_ge_[j] * psi);
    }
  }
  if (!driven && p_total == 0.0 && ws.heff_psi.isZero(0.0)) {
    result.stationary = true;
    return result;
  }

  psi.noalias() -= cplx(0.0, dt) * ws.heff_psi;
  if (no_jump_ == NoJumpNormalization::Divisor) {
    psi /= std::sqrt(1.0 - p_total);
    return result;
  }
  const double nrm = psi.norm();
  if (!(nrm > 1e-150)) {
    throw NumericalError(fmt::format("state norm underflow ({:.3e}) at t={}", nrm, t));
  }
  psi /= nrm;
  return result;
}

void JumpEngine::kick(DenseVector& psi, const std::vector<int>& emitters) const {
  for (int j : emitters) psi = flips_[static_cast<std::size_t>(j - 1)] * psi;
}

std::pair<StateVector, std::optional<ClickEvent>> mc_step(const StateVector& psi, double t, double dt,
                                                           rng::Stream& rng, const SystemConfig& cfg,
                                                           const PulseTrain& train, NoJumpNormalization no_jump) {
  if (psi.n_emitters() != cfg.n_emitters) throw DimensionError("state does not match config");
  if (std::abs(psi.norm() - 1.0) > 1e-9) throw NumericalError("mc_step requires a normalized state");
  const JumpEngine engine(cfg, train, no_jump);
  auto ws = engine.workspace();
  DenseVector amps = psi.amplitudes();
  const auto res = engine.step(amps, t, dt, rng.next(), ws);
  std::optional<ClickEvent> click;
  if (res.jump) click = ClickEvent{t + dt, *res.jump};
  return {StateVector(psi.n_emitters(), std::move(amps)), click};
}

TrajectoryRecord run_trajectory(const JumpEngine& engine, const master::TimeGrid& grid, std::uint64_t master_seed,
                                std::uint64_t trajectory_id, const McOptions& options) {
  TrajectoryRecord rec;
  rec.trajectory_id = trajectory_id;
  rec.master_seed = master_seed;
  const int n = engine.config().n_emitters;
  DenseVector psi = StateVector::ground(n).amplitudes();
  auto ws = engine.workspace();
  rng::Stream stream(master_seed, trajectory_id);

  auto snapshot = [&](std::size_t i) {
    if (options.record_snapshots && grid.is_sample(i)) rec.snapshots.push_back({grid.time(i), StateVector(n, psi)});
  };

  std::size_t i = 0;
  while (i < grid.size()) {
    if (!grid.kicks(i).empty()) engine.kick(psi, grid.kicks(i));
    snapshot(i);
    if (i + 1 >= grid.size()) break;
    stream.seek(i);
    const double t = grid.time(i);
    const auto res = engine.step(psi, t, grid.time(i + 1) - t, stream.next(), ws);
    if (res.jump) rec.events.push_back({grid.time(i + 1), *res.jump});
    ++i;
    if (res.stationary && options.fast_forward) {
      const std::size_t target = grid.next_activity(i);
      for (; i < target; ++i) snapshot(i);
    }
  }
  return rec;
}

TrajectoryRecord run_trajectory(const SystemConfig& cfg, const PulseTrain& train, std::uint64_t master_seed,
                                std::uint64_t trajectory_id, const IntegrationPlan& plan, const McOptions& options) {
  if (plan.t_end == plan.t_start) {
    TrajectoryRecord empty;
    empty.trajectory_id = trajectory_id;
    empty.master_seed = master_seed;
    return empty;
  }
  plan.validate(cfg, train);
  const JumpEngine engine(cfg, train, options.no_jump);
  const auto grid = master::TimeGrid::build(plan, train);
  return run_trajectory(engine, grid, master_seed, trajectory_id, options);
}

EnsembleRecord run_ensemble(const SystemConfig& cfg, const PulseTrain& train, std::uint64_t master_seed,
                            std::size_t n_traj, const IntegrationPlan& plan, const McOptions& options,
                            unsigned workers) {
  if (n_traj < 1) throw RangeError("n_traj must be >= 1");
  plan.validate(cfg, train);
  const JumpEngine engine(cfg, train, options.no_jump);
  const auto grid = master::TimeGrid::build(plan, train);

  EnsembleRecord ens;
  ens.records.resize(n_traj);
  ens.fingerprint = ensemble_fingerprint(cfg, train, plan, master_seed, n_traj, options);
  ens.t_start = plan.t_start;
  ens.t_end = plan.t_end;

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t id = next.fetch_add(1);
      if (id >= n_traj) return;
      try {
        ens.records[id] = run_trajectory(engine, grid, master_seed, id, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_traj);
        return;
      }
    }
  };

  const unsigned n_workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_traj)));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return ens;
}

std::vector<DensityMatrix> reconstruct_density(const EnsembleRecord& ens, const std::vector<double>& times) {
  if (ens.records.empty()) throw NoDataError("empty ensemble");
  const int n = ens.records.front().snapshots.empty() ? 0 : ens.records.front().snapshots.front().state.n_emitters();
  std::vector<DensityMatrix> out;
  out.reserve(times.size());
  for (double t : times) {
    DensityMatrix rho;
    bool first = true;
    for (const auto& rec : ens.records) {
      const auto it = std::find_if(rec.snapshots.begin(), rec.snapshots.end(),
                                   [t](const Snapshot& s) { return std::abs(s.time - t) <= 1e-9; });
      if (it == rec.snapshots.end()) {
        throw NoDataError(fmt::format("trajectory {} has no snapshot at t={}", rec.trajectory_id, t));
      }
      if (first) {
        rho = DensityMatrix(n);
        first = false;
      }
      const auto& v = it->state.amplitudes();
      rho.elements().noalias() += v * v.adjoint();
    }
    rho.elements() /= static_cast<double>(ens.records.size());
    out.push_back(std::move(rho));
  }
  return out;
}

std::uint64_t ensemble_fingerprint(const SystemConfig& cfg, const PulseTrain& train, const IntegrationPlan& plan,
                                   std::uint64_t master_seed, std::size_t n_traj, const McOptions& options) {
  const std::string text =
      fmt::format("{}|{}|{}|seed={} n_traj={} snapshots={} no_jump={}", canonical_text(cfg), canonical_text(train),
                  canonical_text(plan), master_seed, n_traj, options.record_snapshots,
                  options.no_jump == NoJumpNormalization::Renormalize ? "renormalize" : "divisor");
  return fnv1a(text);
}

}  // namespace bundlesim::trajectories
