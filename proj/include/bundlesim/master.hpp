#pragma once

// Deterministic integration of the driven master equation
//   d rho / dt = -i [H_coh(t), rho] + L[rho]
// with fixed-step RK4 on a two-zone time grid (fine steps inside pulse
// windows, coarse steps elsewhere).

#include "bundlesim/hilbert.hpp"
#include "bundlesim/model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace bundlesim::master {

using hilbert::DensityMatrix;
using hilbert::OperatorMatrix;
using model::PulseTrain;
using model::SystemConfig;

struct IntegrationPlan {
  double t_start = 0.0;
  double t_end = 1.0;
  double dt_pulse = 5e-4;
  double dt_free = 1e-3;
  int sample_every = 1;
  /// When non-empty, samples are taken exactly at these times (inserted as
  /// grid breakpoints) instead of every `sample_every` steps.
  std::vector<double> sample_times;

  /// Largest admissible free step for n excitable emitters.
  static double max_dt_free(int n_excitable);
  /// Largest admissible pulse-window step.
  static double max_dt_pulse(const PulseTrain& train);

  void validate(const SystemConfig& cfg, const PulseTrain& train) const;
};

/// Time grid shared by the master-equation and Monte Carlo engines so both
/// report at identical times.
class TimeGrid {
 public:
  static TimeGrid build(const IntegrationPlan& plan, const PulseTrain& train);

  std::size_t size() const { return times_.size(); }
  std::size_t steps() const { return times_.empty() ? 0 : times_.size() - 1; }
  double time(std::size_t i) const { return times_[i]; }
  const std::vector<double>& times() const { return times_; }
  bool is_sample(std::size_t i) const { return sample_[i]; }
  /// Step i -> i+1 overlaps a coherent drive window.
  bool driven_step(std::size_t i) const { return driven_[i]; }
  /// Emitters receiving an instantaneous pi flip at grid point i (ideal pump).
  const std::vector<int>& kicks(std::size_t i) const { return kicks_[i]; }
  /// Next grid point at or after i where something happens: a driven step
  /// starts, a kick is applied, or the grid ends.
  std::size_t next_activity(std::size_t i) const { return next_activity_[i]; }

 private:
  std::vector<double> times_;
  std::vector<bool> sample_;
  std::vector<bool> driven_;
  std::vector<std::vector<int>> kicks_;
  std::vector<std::size_t> next_activity_;
};

class ObservableSet {
 public:
  void add(std::string label, OperatorMatrix op);
  std::size_t size() const { return items_.size(); }
  const std::string& label(std::size_t i) const { return items_[i].first; }
  const OperatorMatrix& op(std::size_t i) const { return items_[i].second; }
  const std::vector<std::pair<std::string, OperatorMatrix>>& items() const { return items_; }

 private:
  std::vector<std::pair<std::string, OperatorMatrix>> items_;
};

/// Precomputed right-hand side of the master equation for one configuration.
class MasterEquation {
 public:
  MasterEquation(const SystemConfig& cfg, const PulseTrain& train);

  hilbert::DenseMatrix rhs(double t, const hilbert::DenseMatrix& rho) const;
  DensityMatrix rk4_step(const DensityMatrix& rho, double t, double dt) const;
  DensityMatrix apply_kicks(const DensityMatrix& rho, const std::vector<int>& emitters) const;

  const SystemConfig& config() const { return cfg_; }
  const PulseTrain& train() const { return train_; }

 private:
  SystemConfig cfg_;
  PulseTrain train_;
  hilbert::SparseMatrix h_static_;  // exchange - (i/2) sum J^+J
  std::vector<hilbert::SparseMatrix> jumps_;
  std::vector<hilbert::SparseMatrix> jumps_dag_;
  std::vector<hilbert::SparseMatrix> raise_eg_;  // sqrt(gamma/2) s_eg^j
  std::vector<hilbert::SparseMatrix> flips_;
};

DensityMatrix rk4_step(const DensityMatrix& rho, double t, double dt, const SystemConfig& cfg,
                       const PulseTrain& train);

struct TimeSeries {
  std::vector<std::string> labels;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // values[sample][observable]
  DensityMatrix final_state;

  /// Column of one observable.
  std::vector<double> column(const std::string& label) const;
};

TimeSeries evolve(const DensityMatrix& rho0, const IntegrationPlan& plan, const ObservableSet& obs,
                  const SystemConfig& cfg, const PulseTrain& train);

/// <J_R^+ J_R> + <J_L^+ J_L>
double waveguide_intensity(const DensityMatrix& rho, const SystemConfig& cfg);

}  // namespace bundlesim::master
