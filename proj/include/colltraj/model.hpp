#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "colltraj/basis.hpp"
#include "colltraj/types.hpp"

namespace colltraj {

// Coupling variants store rates (γ has units of 1/time); the per-site
// amplitudes γ_n carry √rate.

/// System couples to site 0 only: γ_0 = √rate.
struct PointCoupling {
  double rate = 1.0;
  friend bool operator==(const PointCoupling&, const PointCoupling&) = default;
};

/// Feedback loop of delay M·Δt: γ_0 = √rate·e^{iφ}, γ_M = √rate.
struct TwoPointFeedback {
  double rate = 1.0;
  double phase = 0.0;
  int delay_steps = 1;
  friend bool operator==(const TwoPointFeedback&, const TwoPointFeedback&) = default;
};

/// γ_n = √rate · λ · Δt · e^{−λ n Δt}; Lorentzian memory of width λ.
struct ExponentialCoupling {
  double rate = 1.0;
  double memory_rate = 1.0;
  friend bool operator==(const ExponentialCoupling&, const ExponentialCoupling&) = default;
};

/// User-supplied amplitudes; missing trailing sites are zero.
struct RawCoupling {
  std::vector<Complex> amplitudes;
  friend bool operator==(const RawCoupling&, const RawCoupling&) = default;
};

using CouplingVariant = std::variant<PointCoupling, TwoPointFeedback, ExponentialCoupling, RawCoupling>;

struct CouplingProfile {
  std::vector<Complex> gammas;
  CouplingVariant variant;
  double dt = 0.0;

  int size() const noexcept { return static_cast<int>(gammas.size()); }
  /// Σ_n |γ_n|², the total decay rate in the Markovian limit.
  double total_rate() const;
};

CouplingProfile build_coupling(const CouplingVariant& variant, int env_count, double dt);

struct NoSystemHamiltonian {
  friend bool operator==(const NoSystemHamiltonian&, const NoSystemHamiltonian&) = default;
};
/// Ω(a† + a) in the frame rotating at the system frequency.
struct DrivenQubit {
  double omega = 0.0;
  friend bool operator==(const DrivenQubit&, const DrivenQubit&) = default;
};
/// iζ(a†² − a²); needs at least three system levels.
struct Squeezer {
  double zeta = 0.0;
  friend bool operator==(const Squeezer&, const Squeezer&) = default;
};

using SystemHamiltonianSpec = std::variant<NoSystemHamiltonian, DrivenQubit, Squeezer>;

/// Truncated ladder operator a on a `dim`-level system.
DenseMatrix lowering_matrix(int dim);
/// H_S on the system factor alone.
DenseMatrix system_hamiltonian_matrix(int dim, const SystemHamiltonianSpec& spec);
/// Named system observables: "n" (a†a), "x" (a + a†), "y" (i(a† − a)).
/// For a qubit "y" is the Pauli Y matrix in the {|0⟩, |1⟩} basis.
DenseMatrix system_observable(std::string_view name, int dim);

/// op ⊗ 1 on the full space.
SparseOperator embed_system_operator(const BasisEnumeration& basis, const DenseMatrix& op);
SparseOperator build_system_h(const BasisEnumeration& basis, const SystemHamiltonianSpec& spec);

/// H_I = Δt^{-1/2} Σ_n (γ_n a† B_n + γ_n* B_n† a), restricted to the capped basis.
SparseOperator build_interaction(const BasisEnumeration& basis, const CouplingProfile& profile,
                                 double dt);

/// Frequency-domain view of a coupling profile: κ_k = L^{-1/2} Σ_n γ_n e^{iω_k nΔt}
/// with ω_k = 2πk/L and L = NΔt.
struct SpectralProfile {
  std::vector<double> omegas;
  std::vector<Complex> kappas;
  double length = 0.0;
  double dt = 0.0;

  /// ω_k folded into (−π/Δt, π/Δt].
  double signed_omega(std::size_t k) const;
  /// L/(2π)·|κ_k|², the discrete estimate of the spectral density.
  double density(std::size_t k) const;
};

SpectralProfile coupling_spectrum(const CouplingProfile& profile, double dt);

/// J(ω) = (2π)^{-1} γλ² / (λ² + ω²).
double lorentzian_density(double rate, double memory_rate, double omega);

}  // namespace colltraj
