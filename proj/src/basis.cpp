#include "colltraj/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "colltraj/errors.hpp"

namespace colltraj {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  return p > kSaturated ? kSaturated : static_cast<std::uint64_t>(p);
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  return a > kSaturated - b ? kSaturated : a + b;
}

// C(n, k) with saturation.
std::uint64_t choose(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (int i = 1; i <= k; ++i) {
    acc = acc * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (acc > kSaturated) return kSaturated;
  }
  return static_cast<std::uint64_t>(acc);
}

}  // namespace

void ModeLayout::validate() const {
  if (system_dim < 1) throw InvalidArgument("system_dim must be >= 1");
  if (env_count < 1) throw InvalidArgument("env_count must be >= 1");
  if (env_cap < 0) throw InvalidArgument("env_cap must be >= 0");
  if (env_cap > env_count) throw InvalidArgument("env_cap must not exceed env_count");
  if (lo_dim < 0) throw InvalidArgument("lo_dim must be >= 0");
}

std::uint64_t basis_dimension(const ModeLayout& layout, std::size_t max_dimension) {
  layout.validate();
  std::uint64_t env = 0;
  for (int j = 0; j <= layout.env_cap; ++j) env = checked_add(env, choose(layout.env_count, j));
  std::uint64_t total = checked_mul(checked_mul(env, static_cast<std::uint64_t>(layout.system_dim)),
                                    static_cast<std::uint64_t>(layout.lo_block()));
  if (total == kSaturated || total > max_dimension) {
    throw CapacityError("basis dimension exceeds the configured maximum of " +
                        std::to_string(max_dimension) + " amplitudes");
  }
  return total;
}

BasisEnumeration::BasisEnumeration(ModeLayout layout, std::size_t max_dimension)
    : layout_(layout) {
  dimension_ = static_cast<Index>(basis_dimension(layout_, max_dimension));
  const int n_sites = layout_.env_count;
  const int cap = layout_.env_cap;

  binom_.assign(static_cast<std::size_t>(cap + 1) * (n_sites + 1), 0);
  for (int k = 0; k <= cap; ++k)
    for (int n = 0; n <= n_sites; ++n) binom_[k * (n_sites + 1) + n] = choose(n, k);

  weight_offset_.assign(cap + 2, 0);
  for (int w = 0; w <= cap; ++w)
    weight_offset_[w + 1] = weight_offset_[w] + static_cast<Index>(binom(n_sites, w));
  env_size_ = weight_offset_[cap + 1];

  const std::size_t stride = std::max(cap, 1);
  sites_.assign(static_cast<std::size_t>(env_size_) * stride, -1);
  weight_.assign(env_size_, 0);
  site0_occupied_.assign(env_size_, 0);

  // Generate each weight class in colexicographic order; the rank increases by
  // one per step, so positions are written sequentially.
  Index idx = 0;
  std::vector<int> comb;
  for (int w = 0; w <= cap; ++w) {
    comb.resize(w);
    for (int i = 0; i < w; ++i) comb[i] = i;
    while (true) {
      std::copy(comb.begin(), comb.end(), sites_.begin() + idx * stride);
      weight_[idx] = static_cast<std::uint8_t>(w);
      site0_occupied_[idx] = (w > 0 && comb[0] == 0) ? 1 : 0;
      ++idx;
      int i = 0;
      while (i < w) {
        const int limit = (i + 1 < w) ? comb[i + 1] : n_sites;
        if (comb[i] + 1 < limit) break;
        ++i;
      }
      if (i == w) break;
      ++comb[i];
      for (int j = 0; j < i; ++j) comb[j] = j;
    }
  }

  clear_site0_.assign(env_size_, -1);
  set_site0_.assign(env_size_, -1);
  shifted_.assign(env_size_, -1);
  std::vector<int> buf;
  for (Index e = 0; e < env_size_; ++e) {
    const auto sites = env_sites(e);
    if (site0_occupied_[e]) {
      buf.assign(sites.begin() + 1, sites.end());
      clear_site0_[e] = env_rank(buf);
    } else {
      clear_site0_[e] = e;
      buf.assign(sites.begin(), sites.end());
      for (int& s : buf) s -= 1;
      shifted_[e] = env_rank(buf);
      if (static_cast<int>(sites.size()) < cap) {
        buf.assign(1, 0);
        buf.insert(buf.end(), sites.begin(), sites.end());
        set_site0_[e] = env_rank(buf);
      }
    }
  }
}

std::uint64_t BasisEnumeration::binom(int n, int k) const {
  if (k < 0 || k > layout_.env_cap || n < 0) return 0;
  return binom_[k * (layout_.env_count + 1) + n];
}

Index BasisEnumeration::env_rank(std::span<const int> sites) const {
  const int w = static_cast<int>(sites.size());
  if (w > layout_.env_cap) throw InvalidArgument("environment weight exceeds env_cap");
  Index rank = weight_offset_[w];
  for (int i = 0; i < w; ++i) {
    if (sites[i] < 0 || sites[i] >= layout_.env_count || (i > 0 && sites[i] <= sites[i - 1]))
      throw InvalidArgument("environment sites must be strictly increasing and in range");
    rank += static_cast<Index>(binom(sites[i], i + 1));
  }
  return rank;
}

std::span<const int> BasisEnumeration::env_sites(Index env_index) const {
  const std::size_t stride = std::max(layout_.env_cap, 1);
  return {sites_.data() + env_index * stride, static_cast<std::size_t>(weight_[env_index])};
}

int BasisEnumeration::env_weight(Index env_index) const { return weight_[env_index]; }

Index BasisEnumeration::env_without_site(Index env_index, int site) const {
  const auto sites = env_sites(env_index);
  auto it = std::find(sites.begin(), sites.end(), site);
  if (it == sites.end()) return -1;
  std::vector<int> rest(sites.begin(), it);
  rest.insert(rest.end(), it + 1, sites.end());
  return env_rank(rest);
}

Index BasisEnumeration::index_of(const OccupationState& occ) const {
  if (occ.system_n < 0 || occ.system_n >= layout_.system_dim)
    throw InvalidArgument("system occupancy out of range");
  if (static_cast<int>(occ.env_bits.size()) != layout_.env_count)
    throw InvalidArgument("env_bits length must equal env_count");
  if (occ.lo_n < 0 || occ.lo_n >= layout_.lo_block())
    throw InvalidArgument("local oscillator occupancy out of range");
  std::vector<int> sites;
  for (int n = 0; n < layout_.env_count; ++n) {
    if (occ.env_bits[n] > 1) throw InvalidArgument("environment sites hold at most one excitation");
    if (occ.env_bits[n]) sites.push_back(n);
  }
  return compose(occ.system_n, env_rank(sites), occ.lo_n);
}

OccupationState BasisEnumeration::occupation_of(Index index) const {
  if (index < 0 || index >= dimension_) throw InvalidArgument("basis index out of range");
  const Index lo = layout_.lo_block();
  OccupationState occ;
  occ.lo_n = static_cast<int>(index % lo);
  const Index rest = index / lo;
  const Index env = rest % env_size_;
  occ.system_n = static_cast<int>(rest / env_size_);
  occ.env_bits.assign(layout_.env_count, 0);
  for (int s : env_sites(env)) occ.env_bits[s] = 1;
  return occ;
}

SparseOperator mode_lowering(const BasisEnumeration& basis, Mode mode) {
  const ModeLayout& lay = basis.layout();
  const Index E = basis.env_size();
  const Index L = basis.lo_block();
  std::vector<Triplet> entries;
  switch (mode.kind) {
    case ModeKind::kSystem:
      for (int s = 1; s < lay.system_dim; ++s)
        for (Index e = 0; e < E; ++e)
          for (Index l = 0; l < L; ++l)
            entries.emplace_back(basis.compose(s - 1, e, l), basis.compose(s, e, l), std::sqrt(s));
      break;
    case ModeKind::kEnvironment:
      if (mode.site < 0 || mode.site >= lay.env_count) throw InvalidArgument("unknown environment site");
      for (Index e = 0; e < E; ++e) {
        const Index lowered = basis.env_without_site(e, mode.site);
        if (lowered < 0) continue;
        for (int s = 0; s < lay.system_dim; ++s)
          for (Index l = 0; l < L; ++l)
            entries.emplace_back(basis.compose(s, lowered, l), basis.compose(s, e, l), 1.0);
      }
      break;
    case ModeKind::kLocalOscillator:
      if (!lay.has_lo()) throw InvalidArgument("layout has no local oscillator");
      for (int s = 0; s < lay.system_dim; ++s)
        for (Index e = 0; e < E; ++e)
          for (Index l = 1; l < L; ++l)
            entries.emplace_back(basis.compose(s, e, l - 1), basis.compose(s, e, l),
                                 std::sqrt(static_cast<double>(l)));
      break;
  }
  SparseOperator op(basis.dimension(), basis.dimension());
  op.setFromTriplets(entries.begin(), entries.end());
  return op;
}

SparseOperator mode_raising(const BasisEnumeration& basis, Mode mode) {
  return SparseOperator(mode_lowering(basis, mode).adjoint());
}

Complex expectation(const StateVector& state, const SparseOperator& op) {
  if (op.rows() != state.size() || op.cols() != state.size())
    throw InvalidArgument("operator and state dimensions differ");
  const double norm2 = state.squaredNorm();
  if (norm2 == 0.0) throw InvalidArgument("expectation of a zero state");
  const StateVector image = op * state;
  return state.dot(image) / norm2;
}

DensityMatrix partial_trace_system(const BasisEnumeration& basis, const StateVector& state,
                                   double norm_tolerance) {
  if (state.size() != basis.dimension()) throw InvalidArgument("state dimension mismatch");
  const double norm2 = state.squaredNorm();
  if (std::abs(norm2 - 1.0) > norm_tolerance)
    throw PreconditionError("partial trace requires a normalized state (|psi|^2 = " +
                            std::to_string(norm2) + ")");
  // Column s of `blocks` holds the amplitudes with system occupancy s.
  const Eigen::Map<const DenseMatrix> blocks(state.data(), basis.rest_size(), basis.system_dim());
  return blocks.transpose() * blocks.conjugate();
}

void validate_density_matrix(const DensityMatrix& rho, double hermitian_tol, double trace_tol,
                             double eigen_tol) {
  if (rho.rows() != rho.cols()) throw NumericalError("density matrix is not square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > hermitian_tol)
    throw NumericalError("density matrix is not Hermitian");
  if (std::abs(rho.trace() - 1.0) > trace_tol) throw NumericalError("density matrix trace != 1");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(rho, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -eigen_tol)
    throw NumericalError("density matrix has a negative eigenvalue");
}

double purity(const DensityMatrix& rho) { return (rho * rho).trace().real(); }

}  // namespace colltraj
