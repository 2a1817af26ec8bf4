#include "bundlesim/model.hpp"

#include "bundlesim/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <fmt/core.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace bundlesim::model {

using hilbert::DenseMatrix;
using hilbert::DenseVector;
using hilbert::SparseMatrix;
using hilbert::transition_operator;

namespace {
constexpr LevelIndex G = LevelIndex::g;
constexpr LevelIndex F = LevelIndex::f;
constexpr LevelIndex E = LevelIndex::e;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

std::string_view to_string(FreeSpaceModel m) {
  return m == FreeSpaceModel::Collective ? "collective" : "independent";
}

std::optional<FreeSpaceModel> free_space_model_from_string(std::string_view s) {
  if (s == "collective") return FreeSpaceModel::Collective;
  if (s == "independent") return FreeSpaceModel::Independent;
  return std::nullopt;
}

std::string_view to_string(PulseNormalization n) {
  return n == PulseNormalization::UnitArea ? "unit_area" : "root_inside";
}

std::optional<PulseNormalization> pulse_normalization_from_string(std::string_view s) {
  if (s == "unit_area") return PulseNormalization::UnitArea;
  if (s == "root_inside") return PulseNormalization::RootInside;
  return std::nullopt;
}

SystemConfig SystemConfig::uniform(int n_emitters, double spacing, std::vector<int> pumped) {
  SystemConfig cfg;
  cfg.n_emitters = n_emitters;
  cfg.positions.resize(static_cast<std::size_t>(std::max(n_emitters, 0)));
  for (int j = 0; j < n_emitters; ++j) cfg.positions[static_cast<std::size_t>(j)] = j * spacing;
  cfg.pumped = std::move(pumped);
  return cfg;
}

void SystemConfig::validate() const {
  if (n_emitters < 1) throw RangeError(fmt::format("n_emitters must be >= 1, got {}", n_emitters));
  hilbert::basis_dim(n_emitters);
  if (positions.size() != static_cast<std::size_t>(n_emitters)) {
    throw RangeError(fmt::format("{} positions given for {} emitters", positions.size(), n_emitters));
  }
  for (double z : positions) {
    if (!std::isfinite(z)) throw RangeError("emitter positions must be finite");
  }
  auto check_rate = [](const char* name, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw RangeError(fmt::format("{} must be >= 0, got {}", name, v));
  };
  check_rate("gamma_1d", gamma_1d);
  check_rate("gamma", gamma);
  check_rate("gamma_f", gamma_f);
  for (int j : pumped) {
    if (j < 1 || j > n_emitters) {
      throw RangeError(fmt::format("pumped emitter {} outside [1, {}]", j, n_emitters));
    }
  }
}

double SystemConfig::phase_separation(int j, int l) const {
  return kTwoPi * std::abs(positions[static_cast<std::size_t>(j - 1)] -
                           positions[static_cast<std::size_t>(l - 1)]);
}

double PulseSpec::prefactor() const {
  const double pi_quarter = std::pow(std::numbers::pi, 0.25);
  switch (normalization) {
    case PulseNormalization::UnitArea: return std::sqrt(nbar * delta) / pi_quarter;
    case PulseNormalization::RootInside: return std::sqrt(nbar * delta / pi_quarter);
  }
  return 0.0;
}

void PulseSpec::validate() const {
  if (!(nbar > 0.0)) throw RangeError(fmt::format("pulse nbar must be > 0, got {}", nbar));
  if (!(delta > 0.0)) throw RangeError(fmt::format("pulse delta must be > 0, got {}", delta));
  if (!std::isfinite(t_peak) || !std::isfinite(phase)) throw RangeError("pulse timing must be finite");
}

cplx pulse_amplitude(const PulseSpec& p, double t) {
  const double x = t - p.t_peak;
  if (std::abs(x) > p.support_half_width()) return {};
  const double env = p.prefactor() * std::exp(-0.5 * p.delta * p.delta * x * x);
  return std::polar(env, p.phase);
}

PulseTrain PulseTrain::for_pumped(const SystemConfig& cfg, double nbar, double delta,
                                  double first_peak, double period, int repetitions) {
  PulseTrain train;
  train.period = period;
  train.repetitions = repetitions;
  for (int j : cfg.pumped) {
    PulseSpec p;
    p.target = j;
    p.nbar = nbar;
    p.delta = delta;
    p.t_peak = first_peak;
    train.base.push_back(p);
  }
  return train;
}

PulseTrain PulseTrain::none() { return PulseTrain{}; }

void PulseTrain::validate(const SystemConfig& cfg) const {
  if (repetitions < 1) throw RangeError(fmt::format("repetitions must be >= 1, got {}", repetitions));
  for (const auto& p : base) {
    p.validate();
    if (p.target < 1 || p.target > cfg.n_emitters) {
      throw RangeError(fmt::format("pulse target {} outside [1, {}]", p.target, cfg.n_emitters));
    }
  }
  if (repetitions > 1 && !base.empty()) {
    const double support = 5.0 / narrowest_delta();
    if (!(period > 10.0 * support)) {
      throw RangeError(fmt::format("pulse period {} must exceed 10x the pulse support {}", period, support));
    }
  }
}

std::vector<PulseSpec> PulseTrain::instances() const {
  std::vector<PulseSpec> out;
  out.reserve(base.size() * static_cast<std::size_t>(std::max(repetitions, 0)));
  for (int r = 0; r < repetitions; ++r) {
    for (const auto& p : base) {
      PulseSpec q = p;
      q.t_peak = p.t_peak + r * period;
      out.push_back(q);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PulseSpec& a, const PulseSpec& b) { return a.t_peak < b.t_peak; });
  return out;
}

std::vector<double> PulseTrain::repetition_peaks() const {
  std::vector<double> peaks;
  if (base.empty()) return peaks;
  for (int r = 0; r < repetitions; ++r) peaks.push_back(base.front().t_peak + r * period);
  return peaks;
}

double PulseTrain::narrowest_delta() const {
  double d = 0.0;
  for (const auto& p : base) d = std::max(d, p.delta);
  return d;
}

std::vector<cplx> PulseTrain::drive(int n_emitters, double t) const {
  std::vector<cplx> a(static_cast<std::size_t>(n_emitters));
  if (mode != PumpMode::Coherent) return a;
  for (int r = 0; r < repetitions; ++r) {
    for (const auto& p : base) {
      PulseSpec q = p;
      q.t_peak += r * period;
      a[static_cast<std::size_t>(p.target - 1)] += pulse_amplitude(q, t);
    }
  }
  return a;
}

bool PulseTrain::driving_at(double t) const {
  if (mode != PumpMode::Coherent) return false;
  for (int r = 0; r < repetitions; ++r) {
    for (const auto& p : base) {
      if (std::abs(t - (p.t_peak + r * period)) <= p.support_half_width()) return true;
    }
  }
  return false;
}

JumpSet jump_operators(const SystemConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_emitters;
  const std::size_t d = hilbert::basis_dim(n);
  JumpSet js{OperatorMatrix::zero(d), OperatorMatrix::zero(d), {}, {}};

  const double wg = std::sqrt(cfg.gamma_1d / 2.0);
  for (int j = 1; j <= n; ++j) {
    const double kz = kTwoPi * cfg.positions[static_cast<std::size_t>(j - 1)];
    const auto s_fe = transition_operator(j, F, E, n);
    js.right = js.right + (wg * std::polar(1.0, -kz)) * s_fe;
    js.left = js.left + (wg * std::polar(1.0, kz)) * s_fe;
  }

  if (cfg.free_space == FreeSpaceModel::Collective) {
    OperatorMatrix je = OperatorMatrix::zero(d);
    OperatorMatrix jf = OperatorMatrix::zero(d);
    for (int j = 1; j <= n; ++j) {
      je = je + cplx(std::sqrt(cfg.gamma / 2.0)) * transition_operator(j, G, E, n);
      jf = jf + cplx(std::sqrt(cfg.gamma_f / 2.0)) * transition_operator(j, G, F, n);
    }
    js.free_e.push_back(std::move(je));
    js.free_f.push_back(std::move(jf));
  } else {
    for (int j = 1; j <= n; ++j) {
      js.free_e.push_back(cplx(std::sqrt(cfg.gamma)) * transition_operator(j, G, E, n));
      js.free_f.push_back(cplx(std::sqrt(cfg.gamma_f)) * transition_operator(j, G, F, n));
    }
  }
  return js;
}

OperatorMatrix exchange_hamiltonian(const SystemConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_emitters;
  OperatorMatrix h = OperatorMatrix::zero(hilbert::basis_dim(n));
  for (int j = 1; j <= n; ++j) {
    for (int l = 1; l <= n; ++l) {
      if (j == l) continue;
      const double c = 0.5 * cfg.gamma_1d * std::sin(cfg.phase_separation(j, l));
      if (std::abs(c) < 1e-14 * std::max(cfg.gamma_1d, 1.0)) continue;  // integer spacing
      h = h + cplx(c) * (transition_operator(j, E, F, n) * transition_operator(l, F, E, n));
    }
  }
  return h;
}

OperatorMatrix drive_hamiltonian(const SystemConfig& cfg, const PulseTrain& train, double t) {
  const int n = cfg.n_emitters;
  OperatorMatrix h = OperatorMatrix::zero(hilbert::basis_dim(n));
  const auto alpha = train.drive(n, t);
  const double g = std::sqrt(cfg.gamma / 2.0);
  for (int j = 1; j <= n; ++j) {
    const cplx a = alpha[static_cast<std::size_t>(j - 1)];
    if (a == cplx{}) continue;
    h = h + (g * a) * transition_operator(j, E, G, n) +
        (g * std::conj(a)) * transition_operator(j, G, E, n);
  }
  return h;
}

OperatorMatrix coherent_hamiltonian(const SystemConfig& cfg, const PulseTrain& train, double t) {
  return drive_hamiltonian(cfg, train, t) + exchange_hamiltonian(cfg);
}

OperatorMatrix decay_operator(const SystemConfig& cfg) {
  const auto js = jump_operators(cfg);
  OperatorMatrix sum = js.right.adjoint() * js.right + js.left.adjoint() * js.left;
  for (const auto& j : js.free_e) sum = sum + j.adjoint() * j;
  for (const auto& j : js.free_f) sum = sum + j.adjoint() * j;
  return sum;
}

OperatorMatrix effective_hamiltonian(const SystemConfig& cfg, const PulseTrain& train, double t) {
  return coherent_hamiltonian(cfg, train, t) - cplx(0.0, 0.5) * decay_operator(cfg);
}

OperatorMatrix waveguide_rate_operator(const SystemConfig& cfg) {
  const auto js = jump_operators(cfg);
  return js.right.adjoint() * js.right + js.left.adjoint() * js.left;
}

namespace {

// -(1/2) sum_{jl} K_jl L_ab^{jl}[rho] with L_ab^{jl} = s_ab^j s_ba^l rho + rho s_ab^j s_ba^l - 2 s_ba^l rho s_ab^j.
void add_kernel_term(const SystemConfig& cfg, LevelIndex a, LevelIndex b,
                     const std::vector<std::vector<double>>& kernel, const DenseMatrix& rho,
                     DenseMatrix& out) {
  const int n = cfg.n_emitters;
  std::vector<OperatorMatrix> raise, lower;
  for (int j = 1; j <= n; ++j) {
    raise.push_back(transition_operator(j, a, b, n));
    lower.push_back(transition_operator(j, b, a, n));
  }
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) {
      const double k = kernel[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
      if (k == 0.0) continue;
      const SparseMatrix pair = raise[static_cast<std::size_t>(j)].sparse() *
                                lower[static_cast<std::size_t>(l)].sparse();
      DenseMatrix term = pair * rho;
      term += rho * pair;
      term -= 2.0 * (lower[static_cast<std::size_t>(l)].sparse() *
                     (rho * raise[static_cast<std::size_t>(j)].sparse()));
      out -= (0.5 * k) * term;
    }
  }
}

std::vector<std::vector<double>> free_space_kernel(const SystemConfig& cfg, double rate) {
  const auto n = static_cast<std::size_t>(cfg.n_emitters);
  std::vector<std::vector<double>> k(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      if (cfg.free_space == FreeSpaceModel::Collective) {
        k[j][l] = rate / 2.0;
      } else if (j == l) {
        k[j][l] = rate;
      }
    }
  }
  return k;
}

}  // namespace

DenseMatrix dissipator(const SystemConfig& cfg, const DensityMatrix& rho) {
  cfg.validate();
  if (rho.n_emitters() != cfg.n_emitters) throw DimensionError("density matrix does not match config");
  const int n = cfg.n_emitters;
  DenseMatrix out = DenseMatrix::Zero(rho.elements().rows(), rho.elements().cols());

  std::vector<std::vector<double>> wg(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  for (int j = 1; j <= n; ++j) {
    for (int l = 1; l <= n; ++l) {
      wg[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(l - 1)] =
          cfg.gamma_1d * std::cos(cfg.phase_separation(j, l));
    }
  }
  add_kernel_term(cfg, E, F, wg, rho.elements(), out);
  add_kernel_term(cfg, E, G, free_space_kernel(cfg, cfg.gamma), rho.elements(), out);
  add_kernel_term(cfg, F, G, free_space_kernel(cfg, cfg.gamma_f), rho.elements(), out);
  return out;
}

DenseMatrix jump_dissipator(const JumpSet& jumps, const DensityMatrix& rho) {
  const auto& r = rho.elements();
  DenseMatrix out = DenseMatrix::Zero(r.rows(), r.cols());
  auto add = [&](const OperatorMatrix& j) {
    const SparseMatrix& J = j.sparse();
    const SparseMatrix Jd = J.adjoint();
    const SparseMatrix JdJ = Jd * J;
    out += J * (r * Jd);
    out -= 0.5 * (JdJ * r);
    out -= 0.5 * (r * JdJ);
  };
  add(jumps.right);
  add(jumps.left);
  for (const auto& j : jumps.free_e) add(j);
  for (const auto& j : jumps.free_f) add(j);
  return out;
}

namespace {

// Deterministic orthonormal basis for span(vectors): project the standard
// basis vectors in index order and Gram-Schmidt the survivors.
std::vector<DenseVector> canonical_basis(const std::vector<DenseVector>& vectors) {
  const auto dim = vectors.front().size();
  DenseMatrix v(dim, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = vectors[k];
  Eigen::HouseholderQR<DenseMatrix> qr(v);
  const DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(dim, v.cols());
  const DenseMatrix proj = q * q.adjoint();

  std::vector<DenseVector> out;
  for (Eigen::Index i = 0; i < dim && out.size() < vectors.size(); ++i) {
    DenseVector c = proj.col(i);
    for (const auto& b : out) c -= b * b.dot(c);
    const double nrm = c.norm();
    if (nrm < 1e-6) continue;
    out.push_back(c / nrm);
  }
  return out;
}

// Largest-magnitude component (first on ties) made real positive.
void fix_phase(DenseVector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best]) + 1e-12) best = i;
  }
  if (std::abs(v[best]) > 0.0) v *= std::conj(v[best]) / std::abs(v[best]);
}

}  // namespace

std::vector<CollectiveMode> collective_spectrum(const SystemConfig& cfg, int n_active) {
  cfg.validate();
  if (n_active < 1 || n_active > cfg.n_emitters) {
    throw RangeError(fmt::format("n_active {} outside [1, {}]", n_active, cfg.n_emitters));
  }
  const int n = n_active;
  const unsigned n_patterns = 1u << n;

  // Bit j of a pattern set means emitter j+1 is in |e>, clear means |f>.
  auto full_index = [n](unsigned pattern) {
    std::size_t idx = 0, place = 1;
    for (int j = 0; j < n; ++j) {
      idx += ((pattern >> j) & 1u ? 2u : 1u) * place;
      place *= 3;
    }
    return idx;
  };

  std::vector<CollectiveMode> modes;
  for (int m = 0; m <= n; ++m) {
    std::vector<unsigned> sector;
    for (unsigned p = 0; p < n_patterns; ++p) {
      if (std::popcount(p) == m) sector.push_back(p);
    }
    const auto sdim = static_cast<Eigen::Index>(sector.size());
    auto position = [&](unsigned p) {
      return static_cast<Eigen::Index>(std::lower_bound(sector.begin(), sector.end(), p) - sector.begin());
    };

    DenseMatrix h = DenseMatrix::Zero(sdim, sdim);
    for (Eigen::Index c = 0; c < sdim; ++c) {
      const unsigned p = sector[static_cast<std::size_t>(c)];
      for (int l = 0; l < n; ++l) {
        if (!((p >> l) & 1u)) continue;
        const unsigned lowered = p & ~(1u << l);
        for (int j = 0; j < n; ++j) {
          if ((lowered >> j) & 1u) continue;
          const unsigned raised = lowered | (1u << j);
          const cplx coupling = std::polar(1.0, cfg.phase_separation(j + 1, l + 1));
          h(position(raised), c) += cplx(0.0, -0.5 * cfg.gamma_1d) * coupling;
        }
      }
    }

    Eigen::ComplexEigenSolver<DenseMatrix> es(h, true);
    if (es.info() != Eigen::Success) throw NumericalError(fmt::format("eigen solve failed in sector m={}", m));

    std::vector<Eigen::Index> order(static_cast<std::size_t>(sdim));
    for (Eigen::Index i = 0; i < sdim; ++i) order[static_cast<std::size_t>(i)] = i;
    const auto& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      const double da = -ev[a].imag(), db = -ev[b].imag();
      if (std::abs(da - db) > 1e-8) return da > db;
      return ev[a].real() < ev[b].real() - 1e-8;
    });

    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t k = i + 1;
      while (k < order.size() && std::abs(ev[order[k]] - ev[order[i]]) < 1e-8) ++k;
      std::vector<DenseVector> group;
      cplx mean{};
      for (std::size_t q = i; q < k; ++q) {
        group.emplace_back(es.eigenvectors().col(order[q]).normalized());
        mean += ev[order[q]];
      }
      mean /= static_cast<double>(k - i);
      if (group.size() > 1) {
        group = canonical_basis(group);
      }
      for (std::size_t g = 0; g < group.size(); ++g) {
        auto& v = group[g];
        // degenerate groups report the group mean
        const cplx lambda = group.size() > 1 ? mean : ev[order[i + g]];
        fix_phase(v);
        DenseVector full = DenseVector::Zero(static_cast<Eigen::Index>(hilbert::basis_dim(n)));
        for (Eigen::Index s = 0; s < sdim; ++s) {
          full[static_cast<Eigen::Index>(full_index(sector[static_cast<std::size_t>(s)]))] = v[s];
        }
        CollectiveMode mode;
        mode.energy_shift = lambda.real();
        mode.amp_decay = -lambda.imag();
        mode.excitation_number = m;
        mode.state = StateVector(n, std::move(full));
        modes.push_back(std::move(mode));
      }
      i = k;
    }
  }
  return modes;
}

StateVector symmetric_state(int n_emitters, const std::vector<int>& emitters, int m) {
  const int k = static_cast<int>(emitters.size());
  if (m < 0 || m > k) throw RangeError(fmt::format("excitation number {} outside [0, {}]", m, k));
  StateVector s(n_emitters);
  std::vector<LevelIndex> levels(static_cast<std::size_t>(n_emitters), G);
  for (unsigned p = 0; p < (1u << k); ++p) {
    if (std::popcount(p) != m) continue;
    for (int i = 0; i < k; ++i) {
      const int j = emitters[static_cast<std::size_t>(i)];
      if (j < 1 || j > n_emitters) throw RangeError(fmt::format("emitter {} outside [1, {}]", j, n_emitters));
      levels[static_cast<std::size_t>(j - 1)] = ((p >> i) & 1u) ? E : F;
    }
    s.amplitudes()[static_cast<Eigen::Index>(hilbert::basis_index(levels))] = 1.0;
  }
  s.normalize();
  return s;
}

StateVector excited_state(int n_emitters, const std::vector<int>& emitters) {
  std::vector<LevelIndex> levels(static_cast<std::size_t>(n_emitters), G);
  for (int j : emitters) {
    if (j < 1 || j > n_emitters) throw RangeError(fmt::format("emitter {} outside [1, {}]", j, n_emitters));
    levels[static_cast<std::size_t>(j - 1)] = E;
  }
  return StateVector::basis_state(levels);
}

OperatorMatrix pi_flip(int j, int n_emitters) {
  const cplx mi(0.0, -1.0);
  return mi * transition_operator(j, E, G, n_emitters) + mi * transition_operator(j, G, E, n_emitters) +
         transition_operator(j, F, F, n_emitters);
}

}  // namespace bundlesim::model
