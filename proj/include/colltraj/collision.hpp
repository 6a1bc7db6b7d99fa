#pragma once

#include <span>
#include <variant>
#include <vector>

#include "colltraj/basis.hpp"
#include "colltraj/rng.hpp"
#include "colltraj/types.hpp"

namespace colltraj {

/// Direct counting of excitations in environment site 0.
struct Photodetection {
  friend bool operator==(const Photodetection&, const Photodetection&) = default;
};

/// Balanced homodyne detection against a local oscillator of amplitude
/// α·e^{iθ} (α in √rate), truncated to `lo_dim` levels.
struct Homodyne {
  double amplitude = 0.0;
  double phase = 0.0;
  int lo_dim = 2;
  friend bool operator==(const Homodyne&, const Homodyne&) = default;
};

using MeasurementScheme = std::variant<Photodetection, Homodyne>;

/// Throws InvalidArgument when scheme and layout disagree about the local
/// oscillator.
void validate_scheme(const MeasurementScheme& scheme, const ModeLayout& layout);

struct MeasurementOutcome {
  int label = 0;           ///< click count, or ±n / 0 for homodyne
  double eigenvalue = 0.0; ///< 0/1, or ±√n / 0
  double probability = 0.0;
};

/// One eigenvector of Q = C†B + B†C on (site-0 qubit) ⊗ (local oscillator),
/// stored by its at most two nonzero components |0, m₀⟩ and |1, m₁⟩.
struct QEigenvector {
  int label = 0;
  double eigenvalue = 0.0;
  int lo_unexcited = -1;  ///< LO level paired with qubit |0⟩, or -1
  double coeff_unexcited = 0.0;
  int lo_excited = -1;    ///< LO level paired with qubit |1⟩, or -1
  double coeff_excited = 0.0;
};

/// Complete orthonormal eigenbasis of Q in the truncated 2·d_LO space:
/// |n±⟩ = (|0,n⟩ ± |1,n−1⟩)/√2 for n = 1…d_LO−1 with eigenvalue ±√n, plus the
/// zero-eigenvalue states |0,0⟩ and |1,d_LO−1⟩. Order: the two zero states,
/// then n = 1, 2, … with + before −.
struct HomodyneEigensystem {
  int lo_dim = 0;
  std::vector<QEigenvector> vectors;
};

HomodyneEigensystem homodyne_eigensystem(int lo_dim);

/// Truncated coherent amplitudes e^{−|β|²/2} β^n / √n!, renormalized over
/// n < dim. Throws InvalidArgument if the discarded weight exceeds `max_leakage`.
std::vector<Complex> coherent_amplitudes(Complex beta, int dim, double max_leakage = 1e-8);

/// Replace the vacuum LO factor by the coherent state |β⟩. Throws
/// PreconditionError if more than 1e-10 weight sits on excited LO levels.
void prepare_lo(StateVector& state, const BasisEnumeration& basis, Complex beta);

/// Born-rule choice of an index. Negative entries down to -1e-12 are clamped;
/// throws NumericalError if the sum is more than `sum_tolerance` from one.
std::size_t sample_outcome(std::span<const double> probabilities, Rng& rng,
                           double sum_tolerance = 1e-8);
std::size_t sample_outcome(std::span<const double> probabilities, double uniform,
                           double sum_tolerance = 1e-8);

/// [P(no click), P(click)] for site 0.
std::vector<double> photodetection_probabilities(const StateVector& state, const BasisEnumeration& basis);

/// Measure B₀†B₀, collapse, renormalize and reset site 0 to vacuum.
MeasurementOutcome measure_photo(StateVector& state, const BasisEnumeration& basis, Rng& rng);

/// Probabilities of each eigenvector of `eig`, in eigensystem order, for a
/// state whose layout carries the local oscillator explicitly.
std::vector<double> homodyne_probabilities(const StateVector& state, const BasisEnumeration& basis,
                                           const HomodyneEigensystem& eig);

/// Unnormalized ⟨q|ψ⟩ placed on site 0 = |0⟩, LO = |0⟩ (explicit-LO layout).
StateVector homodyne_project(const StateVector& state, const BasisEnumeration& basis,
                             const QEigenvector& q);

/// Measure Q with the LO held in `basis`, then reset site 0 ⊗ LO to vacuum.
MeasurementOutcome measure_homodyne(StateVector& state, const BasisEnumeration& basis,
                                    const HomodyneEigensystem& eig, Rng& rng);

/// Same measurement when the LO is kept as a separate product factor
/// `lo_amplitudes` (its state after prepare_lo). `state` lives on a layout
/// without a local oscillator. Exact because H_S + H_I never acts on the LO.
std::vector<double> homodyne_probabilities_factored(const StateVector& state,
                                                    const BasisEnumeration& basis,
                                                    const HomodyneEigensystem& eig,
                                                    std::span<const Complex> lo_amplitudes);
StateVector homodyne_project_factored(const StateVector& state, const BasisEnumeration& basis,
                                      const QEigenvector& q, std::span<const Complex> lo_amplitudes);
MeasurementOutcome measure_homodyne_factored(StateVector& state, const BasisEnumeration& basis,
                                             const HomodyneEigensystem& eig,
                                             std::span<const Complex> lo_amplitudes, Rng& rng);

/// Truncated environment shift k_n → k_{n−1} with site N−1 refilled by
/// vacuum. Requires site 0 empty (weight ≤ 1e-10). `scratch` is resized.
void apply_shift(StateVector& state, const BasisEnumeration& basis, StateVector& scratch);
StateVector apply_shift(const StateVector& state, const BasisEnumeration& basis);

}  // namespace colltraj
