#pragma once

#include <cstdint>
#include <vector>

#include "colltraj/engine.hpp"
#include "colltraj/model.hpp"
#include "colltraj/rng.hpp"
#include "colltraj/types.hpp"

namespace colltraj {

/// A system with Markovian single-port decay, for the conventional jump
/// unravelings and the master equation.
struct MarkovianSystem {
  int dim = 2;
  SystemHamiltonianSpec hamiltonian = NoSystemHamiltonian{};
  /// Initial amplitudes (normalized on use); empty means level 1.
  std::vector<Complex> initial_state;
  std::vector<std::string> observables{"n"};
};

/// Conventional direct-detection jump unraveling with collapse operator √γ·a.
/// Records follow the collision engine: time jΔt, outcome = click count.
/// Throws InvalidArgument if Δt·(γ + |H_S scale|) > 0.1.
Trajectory mcwf_photodetection(const MarkovianSystem& system, double rate, double dt, int n_steps,
                               Rng& rng, int stride = 1);

/// Conventional homodyne unraveling with finite local oscillator, three
/// outcomes per step: J± = (α e^{iθ} ∓ i√γ a)/√2 with P± = ⟨J±†J±⟩Δt, and the
/// no-jump branch 1 − iH_SΔt − Δt(α² + γa†a)/2. Outcome eigenvalues are ±1, 0.
/// Throws NumericalError if P₊ + P₋ > 0.5 at any step.
Trajectory mcwf_homodyne(const MarkovianSystem& system, double rate, double amplitude, double phase,
                         double dt, int n_steps, Rng& rng, int stride = 1);

enum class McwfKind { kPhotodetection, kHomodyne };

struct McwfSpec {
  McwfKind kind = McwfKind::kPhotodetection;
  MarkovianSystem system;
  double rate = 1.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double dt = 0.01;
  int n_steps = 100;
  int stride = 1;
  std::uint64_t master_seed = 0;
};

/// Ensemble of conventional trajectories, trajectory i seeded from
/// (master_seed, i), aggregated in index order.
EnsembleStats run_mcwf_ensemble(const McwfSpec& spec, const EnsembleOptions& options);

struct LindbladSpec {
  SparseOperator hamiltonian;
  std::vector<SparseOperator> collapse;
  DensityMatrix initial;
  std::vector<double> times;
  double rel_tol = 1e-10;
};

/// ρ(t) at each requested time (ascending, ≥ 0). Trace and positivity are
/// checked to 1e-8; violations throw NumericalError.
std::vector<DensityMatrix> lindblad_solve(const LindbladSpec& spec);

/// Dense Liouvillian exponential; reference for small dimensions.
std::vector<DensityMatrix> lindblad_dense_reference(const LindbladSpec& spec);

/// System with one collapse operator √(ports·γ)·a, e.g. ports = 2 for the
/// feedback geometry without delay.
LindbladSpec markovian_lindblad(const MarkovianSystem& system, double rate, std::vector<double> times,
                                double ports = 1.0);

/// Qubit ⊗ damped cavity equivalent to the exponential coupling of rate γ and
/// memory rate λ: κ_c = 2λ, g = √(γλ/2), H = Ω σ_x + g(σ₊c + σ₋c†), L = √κ_c c.
/// Basis index = qubit · cavity_dim + photon number. Initial state |e, 0⟩.
LindbladSpec jc_pseudomode(double rate, double memory_rate, double omega, int cavity_dim,
                           std::vector<double> times);

/// Reduce a qubit ⊗ cavity density matrix to the qubit.
DensityMatrix trace_out_cavity(const DensityMatrix& rho, int cavity_dim);

struct AmplitudeSeries {
  std::vector<double> times;
  std::vector<Complex> amplitude;
};

/// Exact one-excitation dynamics of H_S + H_E + H_I with the continuous
/// free-field phases (band folded symmetrically), Ω = 0, initial |e⟩⊗vacuum.
/// The chain is padded with uncoupled sites so emitted light never wraps
/// around within the horizon. Sampled at t = kΔt for k = 0…round(T/Δt).
AmplitudeSeries single_excitation_schrodinger(const CouplingProfile& profile, double dt, double horizon);

struct DDESpec {
  double gamma0 = 1.0;       ///< instantaneous amplitude decay rate Γ₀
  double gamma_fb = 1.0;     ///< delayed amplitude feedback rate Γ_fb
  double phase = 0.0;
  double delay = 0.0;
  double horizon = 5.0;
  double step = 0.001;

  void validate() const;
};

/// ċ = −Γ₀ c − Γ_fb e^{iφ} c(t−τ)·1[t>τ], c(0) = 1, classical RK4 with cubic
/// Hermite interpolation of the history. Sampled at multiples of `step`.
AmplitudeSeries feedback_dde(const DDESpec& spec);

struct DDECalibration {
  DDESpec spec;
  double max_error = 0.0;  ///< max |c_dde − c_ref| over the reference grid
  AmplitudeSeries reference;
  AmplitudeSeries fitted;
};

/// Fit (Γ₀, Γ_fb) so feedback_dde matches single_excitation_schrodinger for
/// TwoPointFeedback{rate, phase, delay_steps} over [0, horizon]. Throws
/// CalibrationError when the best fit still misses by more than `tolerance`.
DDECalibration calibrate_feedback_dde(double rate, double phase, int delay_steps, double dt, double horizon,
                                      double tolerance = 0.01);

}  // namespace colltraj
