#include "bundlesim/master.hpp"

#include "bundlesim/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

namespace bundlesim::master {

using hilbert::DenseMatrix;
using hilbert::LevelIndex;
using hilbert::SparseMatrix;

double IntegrationPlan::max_dt_free(int n_excitable) {
  return 1e-3 * std::min(1.0, 1.0 / std::max(1, n_excitable));
}

double IntegrationPlan::max_dt_pulse(const PulseTrain& train) {
  const double delta = train.narrowest_delta();
  return delta > 0.0 ? 1.0 / (10.0 * delta) : 1e300;
}

void IntegrationPlan::validate(const SystemConfig& cfg, const PulseTrain& train) const {
  if (!(t_end > t_start)) throw RangeError(fmt::format("t_end {} must exceed t_start {}", t_end, t_start));
  if (!(dt_pulse > 0.0) || !(dt_free > 0.0)) throw RangeError("time steps must be positive");
  if (sample_every < 1) throw RangeError("sample_every must be >= 1");
  const double tol = 1e-12;
  if (dt_pulse > max_dt_pulse(train) * (1 + tol)) {
    throw StepSizeError(fmt::format("dt_pulse {} exceeds 1/(10 Delta) = {}", dt_pulse, max_dt_pulse(train)));
  }
  const int n_excitable = static_cast<int>(std::max<std::size_t>(cfg.pumped.size(), 1));
  const double rate_scale = std::max(cfg.gamma_1d, 1e-300);
  const double limit = 1e-3 * std::min(1.0, 1.0 / (n_excitable * rate_scale));
  if (dt_free > limit * (1 + tol)) {
    throw StepSizeError(fmt::format("dt_free {} exceeds 1e-3 * min(1, 1/(n Gamma_1D)) = {}", dt_free, limit));
  }
  for (double s : sample_times) {
    if (s < t_start - tol || s > t_end + tol) {
      throw RangeError(fmt::format("sample time {} outside [{}, {}]", s, t_start, t_end));
    }
  }
}

TimeGrid TimeGrid::build(const IntegrationPlan& plan, const PulseTrain& train) {
  const double eps = 1e-12;
  std::vector<double> cuts{plan.t_start, plan.t_end};
  const auto pulses = train.instances();
  for (const auto& p : pulses) {
    if (train.mode == model::PumpMode::Coherent) {
      for (double edge : {p.t_peak - p.support_half_width(), p.t_peak + p.support_half_width()}) {
        if (edge > plan.t_start && edge < plan.t_end) cuts.push_back(edge);
      }
    } else if (p.t_peak >= plan.t_start && p.t_peak <= plan.t_end) {
      cuts.push_back(p.t_peak);
    }
  }
  for (double s : plan.sample_times) cuts.push_back(std::clamp(s, plan.t_start, plan.t_end));
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> breaks;
  for (double c : cuts) {
    if (breaks.empty() || c - breaks.back() > eps) breaks.push_back(c);
  }

  TimeGrid g;
  g.times_.push_back(breaks.front());
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k], b = breaks[k + 1];
    const bool driven = train.driving_at(0.5 * (a + b));
    const double dt = driven ? plan.dt_pulse : plan.dt_free;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / dt - 1e-9)));
    for (std::size_t s = 1; s <= n; ++s) {
      g.times_.push_back(s == n ? b : a + (b - a) * static_cast<double>(s) / static_cast<double>(n));
      g.driven_.push_back(driven);
    }
  }
  g.driven_.push_back(false);

  const std::size_t size = g.times_.size();
  g.sample_.assign(size, false);
  g.kicks_.assign(size, {});

  auto nearest = [&](double t) {
    const auto it = std::lower_bound(g.times_.begin(), g.times_.end(), t - eps);
    return static_cast<std::size_t>(it - g.times_.begin());
  };
  if (plan.sample_times.empty()) {
    for (std::size_t i = 0; i < size; i += static_cast<std::size_t>(plan.sample_every)) g.sample_[i] = true;
    g.sample_[size - 1] = true;
  } else {
    for (double s : plan.sample_times) g.sample_[nearest(std::clamp(s, plan.t_start, plan.t_end))] = true;
  }
  if (train.mode == model::PumpMode::Ideal) {
    for (const auto& p : pulses) {
      if (p.t_peak < plan.t_start || p.t_peak > plan.t_end) continue;
      g.kicks_[nearest(p.t_peak)].push_back(p.target);
    }
  }

  g.next_activity_.assign(size, size - 1);
  for (std::size_t i = size; i-- > 0;) {
    const bool active = g.driven_[i] || !g.kicks_[i].empty() || i == size - 1;
    g.next_activity_[i] = active ? i : g.next_activity_[i + 1];
  }
  return g;
}

void ObservableSet::add(std::string label, OperatorMatrix op) {
  if (op.hermiticity_defect() > 1e-12) {
    throw RangeError(fmt::format("observable '{}' is not Hermitian", label));
  }
  items_.emplace_back(std::move(label), std::move(op));
}

MasterEquation::MasterEquation(const SystemConfig& cfg, const PulseTrain& train) : cfg_(cfg), train_(train) {
  cfg_.validate();
  train_.validate(cfg_);
  const auto jumps = model::jump_operators(cfg_);
  h_static_ = (model::exchange_hamiltonian(cfg_) - cplx(0.0, 0.5) * model::decay_operator(cfg_)).sparse();
  auto push = [&](const OperatorMatrix& j) {
    jumps_.push_back(j.sparse());
    jumps_dag_.push_back(j.adjoint().sparse());
  };
  push(jumps.right);
  push(jumps.left);
  for (const auto& j : jumps.free_e) push(j);
  for (const auto& j : jumps.free_f) push(j);
  const double g = std::sqrt(cfg_.gamma / 2.0);
  for (int j = 1; j <= cfg_.n_emitters; ++j) {
    raise_eg_.push_back((cplx(g) * hilbert::transition_operator(j, LevelIndex::e, LevelIndex::g, cfg_.n_emitters)).sparse());
    flips_.push_back(model::pi_flip(j, cfg_.n_emitters).sparse());
  }
}

DenseMatrix MasterEquation::rhs(double t, const DenseMatrix& rho) const {
  DenseMatrix a = h_static_ * rho;
  if (train_.mode == model::PumpMode::Coherent && train_.driving_at(t)) {
    const auto alpha = train_.drive(cfg_.n_emitters, t);
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] == cplx{}) continue;
      const DenseMatrix up = raise_eg_[j] * rho;
      const DenseMatrix down = raise_eg_[j].adjoint() * rho;
      a += alpha[j] * up + std::conj(alpha[j]) * down;
    }
  }
  // -i (H_eff rho - rho H_eff^+) with rho Hermitian: rho H_eff^+ = (H_eff rho)^+
  DenseMatrix out = cplx(0.0, -1.0) * (a - a.adjoint());
  for (std::size_t k = 0; k < jumps_.size(); ++k) {
    const DenseMatrix jr = jumps_[k] * rho;
    out += jr * jumps_dag_[k];
  }
  return out;
}

DensityMatrix MasterEquation::rk4_step(const DensityMatrix& rho, double t, double dt) const {
  const DenseMatrix& r = rho.elements();
  const DenseMatrix k1 = rhs(t, r);
  const DenseMatrix k2 = rhs(t + 0.5 * dt, r + (0.5 * dt) * k1);
  const DenseMatrix k3 = rhs(t + 0.5 * dt, r + (0.5 * dt) * k2);
  const DenseMatrix k4 = rhs(t + dt, r + dt * k3);
  DenseMatrix next = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

  const cplx tr_old = r.trace();
  const cplx tr = next.trace();
  if (std::abs(tr - tr_old) > 1e-6) {
    throw StepSizeError(fmt::format("trace drift {:.3e} in one step at t={} (dt={})", std::abs(tr - tr_old), t, dt));
  }
  for (Eigen::Index i = 0; i < next.rows(); ++i) {
    const double p = next(i, i).real();
    if (!std::isfinite(p) || p < -1e-6 || p > 1.0 + 1e-6) {
      throw StepSizeError(fmt::format("population {} out of range at t={} (dt={} too large)", p, t, dt));
    }
  }
  if (std::abs(tr - 1.0) > 1e-12) next /= tr.real();
  return DensityMatrix(rho.n_emitters(), std::move(next));
}

DensityMatrix MasterEquation::apply_kicks(const DensityMatrix& rho, const std::vector<int>& emitters) const {
  DenseMatrix r = rho.elements();
  for (int j : emitters) {
    const auto& u = flips_[static_cast<std::size_t>(j - 1)];
    r = u * (r * u.adjoint());
  }
  return DensityMatrix(rho.n_emitters(), std::move(r));
}

DensityMatrix rk4_step(const DensityMatrix& rho, double t, double dt, const SystemConfig& cfg,
                       const PulseTrain& train) {
  return MasterEquation(cfg, train).rk4_step(rho, t, dt);
}

std::vector<double> TimeSeries::column(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw RangeError(fmt::format("no observable '{}'", label));
  const auto k = static_cast<std::size_t>(it - labels.begin());
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& row : values) out.push_back(row[k]);
  return out;
}

TimeSeries evolve(const DensityMatrix& rho0, const IntegrationPlan& plan, const ObservableSet& obs,
                  const SystemConfig& cfg, const PulseTrain& train) {
  plan.validate(cfg, train);
  if (rho0.n_emitters() != cfg.n_emitters) throw DimensionError("initial state does not match config");
  const MasterEquation me(cfg, train);
  const auto grid = TimeGrid::build(plan, train);

  TimeSeries ts;
  for (const auto& [label, op] : obs.items()) ts.labels.push_back(label);

  DensityMatrix rho = rho0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.kicks(i).empty()) rho = me.apply_kicks(rho, grid.kicks(i));
    if (grid.is_sample(i)) {
      ts.times.push_back(grid.time(i));
      std::vector<double> row;
      row.reserve(obs.size());
      for (const auto& [label, op] : obs.items()) row.push_back(hilbert::expectation(op, rho).real());
      ts.values.push_back(std::move(row));
    }
    if (i + 1 < grid.size()) rho = me.rk4_step(rho, grid.time(i), grid.time(i + 1) - grid.time(i));
  }
  ts.final_state = std::move(rho);
  return ts;
}

double waveguide_intensity(const DensityMatrix& rho, const SystemConfig& cfg) {
  return hilbert::expectation(model::waveguide_rate_operator(cfg), rho).real();
}

}  // namespace bundlesim::master
