#pragma once

// Quantum-jump (Monte Carlo wavefunction) unraveling of the driven master
// equation. Each step draws one uniform number and walks the ordered
// thresholds free-space e->g, right, left, free-space f->g, no-jump.

#include "bundlesim/hilbert.hpp"
#include "bundlesim/master.hpp"
#include "bundlesim/model.hpp"
#include "bundlesim/rng.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace bundlesim::trajectories {

using hilbert::DensityMatrix;
using hilbert::StateVector;
using master::IntegrationPlan;
using model::PulseTrain;
using model::SystemConfig;

enum class Channel { WaveguideRight, WaveguideLeft, FreeSpaceE, FreeSpaceF };

/// One-letter tags used in the click-log format: R, L, E, F.
std::string_view channel_tag(Channel c);
std::optional<Channel> channel_from_tag(std::string_view tag);
constexpr bool is_waveguide(Channel c) { return c == Channel::WaveguideRight || c == Channel::WaveguideLeft; }

struct ClickEvent {
  double time = 0.0;
  Channel channel = Channel::WaveguideRight;
  friend bool operator==(const ClickEvent&, const ClickEvent&) = default;
};

struct Snapshot {
  double time = 0.0;
  StateVector state;
};

struct TrajectoryRecord {
  std::uint64_t trajectory_id = 0;
  std::uint64_t master_seed = 0;
  std::vector<ClickEvent> events;
  std::vector<Snapshot> snapshots;

  std::size_t count(Channel c) const;
  std::size_t waveguide_clicks() const;
};

struct EnsembleRecord {
  std::vector<TrajectoryRecord> records;
  std::uint64_t fingerprint = 0;
  double t_start = 0.0;
  double t_end = 0.0;
};

enum class NoJumpNormalization {
  Renormalize,  // divide by the actual norm after (I - i H_eff dt)
  Divisor,      // divide by sqrt(1 - P_total)
};

struct McOptions {
  bool record_snapshots = false;
  NoJumpNormalization no_jump = NoJumpNormalization::Renormalize;
  /// Skip over stretches where the state is an exact stationary dark state
  /// and no drive or kick is pending. Skipped steps are exact identities.
  bool fast_forward = true;
};

/// Precomputed operators for one configuration; immutable and shareable
/// across worker threads. Per-thread scratch lives in Workspace.
class JumpEngine {
 public:
  JumpEngine(const SystemConfig& cfg, const PulseTrain& train,
             NoJumpNormalization no_jump = NoJumpNormalization::Renormalize);

  struct Workspace {
    hilbert::DenseVector heff_psi;
    std::vector<hilbert::DenseVector> jump_psi;
    std::vector<double> probabilities;
  };
  Workspace workspace() const;

  struct StepResult {
    std::optional<Channel> jump;
    bool stationary = false;  // no drive, zero jump probabilities and H_eff psi = 0
  };

  /// One step of length dt from time t with uniform draw r in [0, 1).
  /// psi is updated in place and must be normalized on entry.
  StepResult step(hilbert::DenseVector& psi, double t, double dt, double r, Workspace& ws) const;
  /// Instantaneous pi flips (ideal pump mode).
  void kick(hilbert::DenseVector& psi, const std::vector<int>& emitters) const;

  std::size_t channel_count() const { return channels_.size(); }
  Channel channel(std::size_t k) const { return channels_[k].first; }
  const SystemConfig& config() const { return cfg_; }
  const PulseTrain& train() const { return train_; }

 private:
  SystemConfig cfg_;
  PulseTrain train_;
  NoJumpNormalization no_jump_;
  hilbert::SparseMatrix h_static_;
  std::vector<std::pair<Channel, hilbert::SparseMatrix>> channels_;  // threshold order
  std::vector<hilbert::SparseMatrix> raise_eg_;
  std::vector<hilbert::SparseMatrix> lower_ge_;
  std::vector<hilbert::SparseMatrix> flips_;
};

/// Single Monte Carlo step drawing from `rng`. Returns the new state and the
/// emitted click, if any (stamped at t + dt).
std::pair<StateVector, std::optional<ClickEvent>> mc_step(
    const StateVector& psi, double t, double dt, rng::Stream& rng, const SystemConfig& cfg,
    const PulseTrain& train, NoJumpNormalization no_jump = NoJumpNormalization::Renormalize);

/// Trajectory `trajectory_id` of the ensemble keyed by `master_seed`, started
/// in |g...g> at plan.t_start. Draw k of the trajectory belongs to grid step k.
/// A zero-length span yields an empty record.
TrajectoryRecord run_trajectory(const SystemConfig& cfg, const PulseTrain& train, std::uint64_t master_seed,
                                std::uint64_t trajectory_id, const IntegrationPlan& plan,
                                const McOptions& options = {});

TrajectoryRecord run_trajectory(const JumpEngine& engine, const master::TimeGrid& grid,
                                std::uint64_t master_seed, std::uint64_t trajectory_id,
                                const McOptions& options);

/// Trajectories 0..n_traj-1 on up to `workers` threads. The result is
/// independent of the worker count.
EnsembleRecord run_ensemble(const SystemConfig& cfg, const PulseTrain& train, std::uint64_t master_seed,
                            std::size_t n_traj, const IntegrationPlan& plan, const McOptions& options = {},
                            unsigned workers = 1);

/// (1/M) sum_m |phi_m(t)><phi_m(t)| at each requested snapshot time.
std::vector<DensityMatrix> reconstruct_density(const EnsembleRecord& ens, const std::vector<double>& times);

/// Hash of every input that determines an ensemble.
std::uint64_t ensemble_fingerprint(const SystemConfig& cfg, const PulseTrain& train, const IntegrationPlan& plan,
                                   std::uint64_t master_seed, std::size_t n_traj, const McOptions& options);

}  // namespace bundlesim::trajectories
