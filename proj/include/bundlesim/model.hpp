#pragma once

// Physical model of N three-level emitters coupled to a 1D waveguide.
//
// Units: Gamma_1D = hbar = c = 1. Times are in 1/Gamma_1D, positions in
// resonant wavelengths lambda_a, so k_a z_jl = 2 pi |z_j - z_l|. Everything is
// written in the frame rotating at omega_ef with a resonant drive, so bare
// level energies never appear.

#include "bundlesim/hilbert.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bundlesim::model {

using hilbert::DensityMatrix;
using hilbert::LevelIndex;
using hilbert::OperatorMatrix;
using hilbert::StateVector;

/// How the two free-space decay channels act on the emitter array.
///
/// Collective: J_gamma = sqrt(gamma/2) sum_j sigma_ge^j and
///             J_gammaf = sqrt(gamma_f/2) sum_j sigma_gf^j (one operator each).
/// Independent: J_gamma^j = sqrt(gamma) sigma_ge^j and
///              J_gammaf^j = sqrt(gamma_f) sigma_gf^j (one operator per emitter),
///              i.e. single-emitter e->g rate gamma and f->g rate gamma_f.
/// The dissipator always matches the selected unraveling.
enum class FreeSpaceModel { Collective, Independent };

std::string_view to_string(FreeSpaceModel m);
std::optional<FreeSpaceModel> free_space_model_from_string(std::string_view s);

struct SystemConfig {
  int n_emitters = 0;
  std::vector<double> positions;  // z_j in units of lambda_a
  double gamma_1d = 1.0;
  double gamma = 0.05;
  double gamma_f = 2.0;
  std::vector<int> pumped;  // 1-based emitter indices
  FreeSpaceModel free_space = FreeSpaceModel::Collective;

  /// Emitters on a line with constant spacing, first at z = 0.
  static SystemConfig uniform(int n_emitters, double spacing, std::vector<int> pumped);

  void validate() const;
  /// k_a z_jl for 1-based emitter indices.
  double phase_separation(int j, int l) const;
};

enum class PulseNormalization {
  UnitArea,  // A = sqrt(nbar * Delta) / pi^(1/4): integral |alpha|^2 dt = nbar
  RootInside,  // A = sqrt(nbar * Delta / pi^(1/4))
};

std::string_view to_string(PulseNormalization n);
std::optional<PulseNormalization> pulse_normalization_from_string(std::string_view s);

struct PulseSpec {
  int target = 1;       // 1-based emitter index
  double nbar = 4182.0;
  double delta = 200.0;  // spectral width
  double t_peak = 0.0;
  double phase = 0.0;
  PulseNormalization normalization = PulseNormalization::UnitArea;

  double prefactor() const;
  /// Envelope is zero outside |t - t_peak| <= support_half_width().
  double support_half_width() const { return 5.0 / delta; }
  void validate() const;
};

enum class PumpMode {
  Coherent,  // Gaussian drive through H_coh
  Ideal,     // instantaneous pi rotation g <-> e on the target at t_peak
};

struct PulseTrain {
  std::vector<PulseSpec> base;
  double period = 6.0;
  int repetitions = 1;
  PumpMode mode = PumpMode::Coherent;

  /// One pulse per pumped emitter, all peaking at first_peak.
  static PulseTrain for_pumped(const SystemConfig& cfg, double nbar, double delta,
                               double first_peak, double period, int repetitions);
  static PulseTrain none();

  void validate(const SystemConfig& cfg) const;
  bool empty() const { return base.empty(); }
  /// Every pulse instance (base x repetitions), ordered by peak time.
  std::vector<PulseSpec> instances() const;
  /// Peak times of repetition r of the first base pulse, r = 0..repetitions-1.
  std::vector<double> repetition_peaks() const;
  double narrowest_delta() const;
  /// Drive amplitude alpha_j(t) per emitter (index 0 = emitter 1).
  std::vector<cplx> drive(int n_emitters, double t) const;
  bool driving_at(double t) const;
};

cplx pulse_amplitude(const PulseSpec& p, double t);

/// Right/left waveguide jump operators and the free-space channels. In the
/// collective model each free-space list holds one operator, in the
/// independent model one per emitter.
struct JumpSet {
  OperatorMatrix right;
  OperatorMatrix left;
  std::vector<OperatorMatrix> free_e;
  std::vector<OperatorMatrix> free_f;
};

JumpSet jump_operators(const SystemConfig& cfg);

/// Waveguide-mediated coherent exchange (Gamma_1D/2) sum_{j!=l} sin(k z_jl) s_ef^j s_fe^l.
OperatorMatrix exchange_hamiltonian(const SystemConfig& cfg);
/// sqrt(gamma/2) sum_j (alpha_j s_eg^j + h.c.) at time t.
OperatorMatrix drive_hamiltonian(const SystemConfig& cfg, const PulseTrain& train, double t);
OperatorMatrix coherent_hamiltonian(const SystemConfig& cfg, const PulseTrain& train, double t);
/// sum_beta J_beta^+ J_beta^-.
OperatorMatrix decay_operator(const SystemConfig& cfg);
OperatorMatrix effective_hamiltonian(const SystemConfig& cfg, const PulseTrain& train, double t);

/// Lindblad dissipator evaluated through the pairwise kernel form
///   -(1/2) sum_{jl} K_jl (s_ab^j s_ba^l rho + rho s_ab^j s_ba^l - 2 s_ba^l rho s_ab^j)
/// for the e->f (waveguide), e->g and f->g transitions.
hilbert::DenseMatrix dissipator(const SystemConfig& cfg, const DensityMatrix& rho);

/// Lindblad sum over the jump operators, sum_beta (J rho J^+ - {J^+J, rho}/2).
hilbert::DenseMatrix jump_dissipator(const JumpSet& jumps, const DensityMatrix& rho);

/// Waveguide emission-rate operator J_R^+J_R + J_L^+J_L.
OperatorMatrix waveguide_rate_operator(const SystemConfig& cfg);

struct CollectiveMode {
  double energy_shift = 0.0;  // relative to m * omega_ef
  double amp_decay = 0.0;     // amplitude decay rate; population decays at 2x
  int excitation_number = 0;
  StateVector state;          // on n_active emitters, g-level unoccupied
};

/// Eigenmodes of -i(Gamma_1D/2) sum_{jl} e^{i k z_jl} s_ef^j s_fe^l on the
/// first n_active emitters, sector by sector. Sorted by excitation number,
/// then descending amp_decay.
std::vector<CollectiveMode> collective_spectrum(const SystemConfig& cfg, int n_active);

/// Symmetric Dicke-like state |S_m> of the given emitters (1-based, the rest
/// of the array stays in |g>): m emitters in |e>, the others in |f>.
StateVector symmetric_state(int n_emitters, const std::vector<int>& emitters, int m);

/// |e...e> on the given emitters, |g> elsewhere.
StateVector excited_state(int n_emitters, const std::vector<int>& emitters);

/// Instantaneous pi rotation on emitter j: |g> -> -i|e>, |e> -> -i|g>.
OperatorMatrix pi_flip(int j, int n_emitters);

}  // namespace bundlesim::model
