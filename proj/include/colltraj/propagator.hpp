#pragma once

#include <memory>
#include <vector>

#include "colltraj/types.hpp"

namespace colltraj {

enum class PropagatorMethod {
  kRungeKutta,        ///< adaptive Dormand–Prince on the Schrödinger equation
  kKrylov,            ///< Lanczos approximation of e^{−iHΔt}ψ with substepping
  kBlockExponential,  ///< exact exponential of each connected block of H
  kAuto,              ///< block exponential when every block is small, else Krylov
};

struct PropagatorConfig {
  PropagatorMethod method = PropagatorMethod::kRungeKutta;
  double rel_tol = 1e-10;
  int max_substeps = 100000;
  int krylov_dim = 24;
  /// Largest connected block handled densely by kBlockExponential / kAuto.
  Index max_block = 256;

  void validate() const;
  friend bool operator==(const PropagatorConfig&, const PropagatorConfig&) = default;
};

/// e^{−iHΔt} for a fixed Hermitian H and step Δt. Construction does all
/// precomputation; `apply` is const and re-entrant, so one instance can be
/// shared by many trajectory threads.
class Propagator {
 public:
  Propagator(SparseOperator hamiltonian, double dt, PropagatorConfig config = {});
  ~Propagator();
  Propagator(Propagator&&) noexcept;
  Propagator& operator=(Propagator&&) noexcept;

  /// In-place ψ ← e^{−iHΔt}ψ. Throws NumericalError on NaN/overflow or when
  /// the substep budget is exhausted. The norm is not renormalized.
  void apply(StateVector& state) const;

  /// Method actually used (kAuto is resolved at construction).
  PropagatorMethod method() const noexcept { return method_; }
  double dt() const noexcept { return dt_; }
  Index dimension() const noexcept { return hamiltonian_.rows(); }
  /// Size of the largest connected block of H (computed for block methods).
  Index largest_block() const noexcept { return largest_block_; }

 private:
  struct Blocks;

  void apply_runge_kutta(StateVector& state) const;
  void apply_krylov(StateVector& state) const;
  void apply_blocks(StateVector& state) const;

  SparseOperator hamiltonian_;
  double dt_;
  PropagatorConfig config_;
  PropagatorMethod method_;
  Index largest_block_ = 0;
  std::unique_ptr<Blocks> blocks_;
};

/// One-shot convenience wrapper around Propagator.
StateVector evolve(const StateVector& state, const SparseOperator& hamiltonian, double dt,
                   const PropagatorConfig& config = {});

/// Connected components of the sparsity graph of `op` (symmetrized), each
/// sorted ascending; components are ordered by their smallest index.
std::vector<std::vector<Index>> connected_blocks(const SparseOperator& op);

}  // namespace colltraj
