#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "colltraj/types.hpp"

namespace colltraj {

inline constexpr std::size_t kDefaultMaxDimension = 5'000'000;

/// Shape of the truncated space: system ⊗ environment chain ⊗ local oscillator.
///
/// The environment is a chain of `env_count` qubits (site 0 is the one that
/// is measured) with at most `env_cap` excitations in total. `lo_dim == 0`
/// means no local oscillator.
struct ModeLayout {
  int system_dim = 2;
  int env_count = 1;
  int env_cap = 1;
  int lo_dim = 0;

  void validate() const;
  bool has_lo() const noexcept { return lo_dim > 0; }
  Index lo_block() const noexcept { return lo_dim > 0 ? lo_dim : 1; }

  friend bool operator==(const ModeLayout&, const ModeLayout&) = default;
};

/// Closed-form basis size d_S · Σ_{j≤K} C(N, j) · max(d_LO, 1). Throws
/// CapacityError if the count overflows or exceeds `max_dimension`.
std::uint64_t basis_dimension(const ModeLayout& layout,
                              std::size_t max_dimension = kDefaultMaxDimension);

struct OccupationState {
  int system_n = 0;
  std::vector<std::uint8_t> env_bits;  // env_bits[n] is the occupancy of site n
  int lo_n = 0;

  friend bool operator==(const OccupationState&, const OccupationState&) = default;
};

enum class ModeKind { kSystem, kEnvironment, kLocalOscillator };

struct Mode {
  ModeKind kind = ModeKind::kSystem;
  int site = 0;

  static Mode system() { return {ModeKind::kSystem, 0}; }
  static Mode env(int site) { return {ModeKind::kEnvironment, site}; }
  static Mode lo() { return {ModeKind::kLocalOscillator, 0}; }
};

/// Deterministic bijection between occupations and dense indices.
///
/// Ordering: the system index varies slowest, the local oscillator fastest.
/// Environment bit-vectors are grouped by weight; inside a weight class they
/// are ranked with the combinatorial number system, which is the numeric
/// order of the bitmask k_{N-1}…k_0. Index 0 is the global vacuum.
///
///   index = (system_n · E + env_index) · L + lo_n
class BasisEnumeration {
 public:
  explicit BasisEnumeration(ModeLayout layout,
                            std::size_t max_dimension = kDefaultMaxDimension);

  const ModeLayout& layout() const noexcept { return layout_; }
  Index dimension() const noexcept { return dimension_; }
  Index system_dim() const noexcept { return layout_.system_dim; }
  Index env_size() const noexcept { return env_size_; }
  Index lo_block() const noexcept { return layout_.lo_block(); }
  /// Size of everything except the system factor (E · L).
  Index rest_size() const noexcept { return env_size_ * layout_.lo_block(); }

  Index index_of(const OccupationState& occ) const;
  OccupationState occupation_of(Index index) const;

  Index compose(int system_n, Index env_index, int lo_n) const noexcept {
    return (system_n * env_size_ + env_index) * layout_.lo_block() + lo_n;
  }

  /// Rank of the environment configuration with the given occupied sites
  /// (strictly increasing).
  Index env_rank(std::span<const int> sites) const;
  /// Occupied sites of an environment configuration, increasing.
  std::span<const int> env_sites(Index env_index) const;
  int env_weight(Index env_index) const;

  bool env_site0_occupied(Index env_index) const { return site0_occupied_[env_index] != 0; }
  /// Index of the configuration with site 0 emptied (identity if already empty).
  Index env_clear_site0(Index env_index) const { return clear_site0_[env_index]; }
  /// Index with site 0 filled, or -1 when site 0 is occupied or the cap forbids it.
  Index env_set_site0(Index env_index) const { return set_site0_[env_index]; }
  /// Image under the shift k_n → k_{n-1}, or -1 when site 0 is occupied.
  Index env_shifted(Index env_index) const { return shifted_[env_index]; }
  /// Index with `site` emptied, or -1 when it is not occupied.
  Index env_without_site(Index env_index, int site) const;

 private:
  std::uint64_t binom(int n, int k) const;

  ModeLayout layout_;
  Index env_size_ = 0;
  Index dimension_ = 0;
  std::vector<std::uint64_t> binom_;       // (K+1) x (N+1), row k
  std::vector<Index> weight_offset_;       // first index of each weight class, size K+2
  std::vector<int> sites_;                 // env_size x K, padded with -1
  std::vector<std::uint8_t> weight_;
  std::vector<std::uint8_t> site0_occupied_;
  std::vector<Index> clear_site0_;
  std::vector<Index> set_site0_;
  std::vector<Index> shifted_;
};

/// Ladder operator lowering `mode` by one quantum. Matrix elements that
/// would leave the capped basis are dropped.
SparseOperator mode_lowering(const BasisEnumeration& basis, Mode mode);
SparseOperator mode_raising(const BasisEnumeration& basis, Mode mode);

/// ⟨ψ|op|ψ⟩ / ‖ψ‖².
Complex expectation(const StateVector& state, const SparseOperator& op);

/// Reduced density matrix of the system factor. Throws PreconditionError
/// when |‖ψ‖² − 1| exceeds `norm_tolerance`.
DensityMatrix partial_trace_system(const BasisEnumeration& basis, const StateVector& state,
                                   double norm_tolerance = 1e-9);

/// Throws NumericalError unless `rho` is Hermitian, unit-trace and PSD
/// within the given tolerances.
void validate_density_matrix(const DensityMatrix& rho, double hermitian_tol = 1e-10,
                             double trace_tol = 1e-9, double eigen_tol = 1e-10);

double purity(const DensityMatrix& rho);

}  // namespace colltraj
