#include "colltraj/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/numeric/odeint.hpp>

#include "colltraj/errors.hpp"

namespace colltraj {

namespace {

bool all_finite(const Complex* data, Index n) {
  for (Index i = 0; i < n; ++i)
    if (!std::isfinite(data[i].real()) || !std::isfinite(data[i].imag())) return false;
  return true;
}

// U = V e^{−iΛΔt} V† for Hermitian H.
DenseMatrix hermitian_exponential(const DenseMatrix& h, double dt) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(h);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXcd phases =
      (eig.eigenvalues().cast<Complex>() * Complex(0.0, -dt)).array().exp().matrix();
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

class UnionFind {
 public:
  explicit UnionFind(Index n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), Index{0}); }
  Index find(Index x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
  }

 private:
  std::vector<Index> parent_;
};

}  // namespace

void PropagatorConfig::validate() const {
  if (!(rel_tol > 0.0) || rel_tol > 1e-4) throw InvalidArgument("propagator rel_tol must lie in (0, 1e-4]");
  if (max_substeps < 1) throw InvalidArgument("max_substeps must be >= 1");
  if (krylov_dim < 2) throw InvalidArgument("krylov_dim must be >= 2");
  if (max_block < 1) throw InvalidArgument("max_block must be >= 1");
}

std::vector<std::vector<Index>> connected_blocks(const SparseOperator& op) {
  const Index n = op.rows();
  UnionFind uf(n);
  for (Index r = 0; r < op.outerSize(); ++r)
    for (SparseOperator::InnerIterator it(op, r); it; ++it)
      if (it.value() != Complex{}) uf.unite(it.row(), it.col());
  std::vector<Index> root_slot(n, -1);
  std::vector<std::vector<Index>> blocks;
  for (Index i = 0; i < n; ++i) {
    const Index root = uf.find(i);
    if (root_slot[root] < 0) {
      root_slot[root] = static_cast<Index>(blocks.size());
      blocks.emplace_back();
    }
    blocks[root_slot[root]].push_back(i);
  }
  return blocks;
}

struct Propagator::Blocks {
  // Blocks of size one reduce to a phase; larger ones share unitaries with
  // identical submatrices.
  std::vector<Index> phase_index;
  std::vector<Complex> phase_value;
  std::vector<std::vector<Index>> members;
  std::vector<std::size_t> unitary_of;
  std::vector<DenseMatrix> unitaries;
};

Propagator::Propagator(SparseOperator hamiltonian, double dt, PropagatorConfig config)
    : hamiltonian_(std::move(hamiltonian)), dt_(dt), config_(config), method_(config.method) {
  config_.validate();
  if (hamiltonian_.rows() != hamiltonian_.cols()) throw InvalidArgument("Hamiltonian must be square");
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidArgument("dt must be positive");
  hamiltonian_.makeCompressed();
  const SparseOperator adjoint = hamiltonian_.adjoint();
  const SparseOperator diff = hamiltonian_ - adjoint;
  double scale = 1.0, asym = 0.0;
  for (Index k = 0; k < hamiltonian_.nonZeros(); ++k) scale = std::max(scale, std::abs(hamiltonian_.valuePtr()[k]));
  for (Index k = 0; k < diff.nonZeros(); ++k) asym = std::max(asym, std::abs(diff.valuePtr()[k]));
  if (asym > 1e-12 * scale) throw InvalidArgument("Hamiltonian is not Hermitian");

  if (method_ == PropagatorMethod::kBlockExponential || method_ == PropagatorMethod::kAuto) {
    auto components = connected_blocks(hamiltonian_);
    for (const auto& c : components) largest_block_ = std::max<Index>(largest_block_, c.size());
    if (largest_block_ > config_.max_block) {
      if (method_ == PropagatorMethod::kBlockExponential)
        throw InvalidArgument("largest connected block exceeds max_block");
      method_ = PropagatorMethod::kKrylov;
      return;
    }
    method_ = PropagatorMethod::kBlockExponential;
    blocks_ = std::make_unique<Blocks>();
    std::map<std::vector<double>, std::size_t> cache;
    for (auto& members : components) {
      const Index m = static_cast<Index>(members.size());
      if (m == 1) {
        const Complex h = hamiltonian_.coeff(members[0], members[0]);
        if (h != Complex{}) {
          blocks_->phase_index.push_back(members[0]);
          blocks_->phase_value.push_back(std::exp(Complex(0.0, -dt_) * h));
        }
        continue;
      }
      DenseMatrix local = DenseMatrix::Zero(m, m);
      std::vector<double> key;
      key.reserve(2 * m * m);
      for (Index i = 0; i < m; ++i)
        for (SparseOperator::InnerIterator it(hamiltonian_, members[i]); it; ++it) {
          const auto pos = std::lower_bound(members.begin(), members.end(), it.col());
          local(i, pos - members.begin()) = it.value();
        }
      for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i) {
          key.push_back(local(i, j).real());
          key.push_back(local(i, j).imag());
        }
      auto [slot, inserted] = cache.try_emplace(std::move(key), blocks_->unitaries.size());
      if (inserted) blocks_->unitaries.push_back(hermitian_exponential(local, dt_));
      blocks_->members.push_back(std::move(members));
      blocks_->unitary_of.push_back(slot->second);
    }
  }
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

void Propagator::apply(StateVector& state) const {
  if (state.size() != hamiltonian_.rows()) throw InvalidArgument("state dimension mismatch");
  switch (method_) {
    case PropagatorMethod::kRungeKutta: apply_runge_kutta(state); break;
    case PropagatorMethod::kKrylov: apply_krylov(state); break;
    case PropagatorMethod::kBlockExponential: apply_blocks(state); break;
    case PropagatorMethod::kAuto: throw InvalidArgument("unresolved propagator method");
  }
  if (!all_finite(state.data(), state.size())) throw NumericalError("propagator produced a non-finite amplitude");
}

void Propagator::apply_blocks(StateVector& state) const {
  for (std::size_t k = 0; k < blocks_->phase_index.size(); ++k)
    state[blocks_->phase_index[k]] *= blocks_->phase_value[k];
  Eigen::VectorXcd local, image;
  for (std::size_t b = 0; b < blocks_->members.size(); ++b) {
    const auto& members = blocks_->members[b];
    const Index m = static_cast<Index>(members.size());
    local.resize(m);
    for (Index i = 0; i < m; ++i) local[i] = state[members[i]];
    image.noalias() = blocks_->unitaries[blocks_->unitary_of[b]] * local;
    for (Index i = 0; i < m; ++i) state[members[i]] = image[i];
  }
}

void Propagator::apply_runge_kutta(StateVector& state) const {
  namespace ode = boost::numeric::odeint;
  using OdeState = std::vector<Complex>;
  const Index n = state.size();
  OdeState x(state.data(), state.data() + n);
  auto rhs = [this, n](const OdeState& psi, OdeState& dpsi, double) {
    Eigen::Map<const StateVector> in(psi.data(), n);
    Eigen::Map<StateVector> out(dpsi.data(), n);
    out.noalias() = hamiltonian_ * in;
    out *= Complex(0.0, -1.0);
  };
  auto stepper = ode::make_controlled(config_.rel_tol, config_.rel_tol, ode::runge_kutta_dopri5<OdeState>());
  int steps = 0;
  auto observer = [&](const OdeState& psi, double) {
    if (!all_finite(psi.data(), n)) throw NumericalError("non-finite amplitude during integration");
    if (++steps > config_.max_substeps) throw NumericalError("propagator exceeded max_substeps");
  };
  ode::integrate_adaptive(stepper, rhs, x, 0.0, dt_, dt_, observer);
  state = Eigen::Map<const StateVector>(x.data(), n);
}

void Propagator::apply_krylov(StateVector& state) const {
  const Index n = state.size();
  const int m_max = static_cast<int>(std::min<Index>(config_.krylov_dim, n));
  DenseMatrix basis(n, m_max + 1);
  DenseMatrix hess = DenseMatrix::Zero(m_max + 1, m_max);
  double remaining = dt_;
  double h = dt_;
  int substeps = 0;
  while (remaining > 0.0) {
    if (++substeps > config_.max_substeps) throw NumericalError("Krylov propagator exceeded max_substeps");
    const double beta = state.norm();
    if (beta == 0.0) return;
    basis.col(0) = state / beta;
    hess.setZero();
    int dim = m_max;
    bool breakdown = false;
    for (int j = 0; j < m_max; ++j) {
      Eigen::VectorXcd w = hamiltonian_ * basis.col(j);
      // Two Gram-Schmidt passes keep the basis orthonormal to rounding.
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const Complex c = basis.col(i).dot(w);
          hess(i, j) += c;
          w -= c * basis.col(i);
        }
      }
      const double next = w.norm();
      hess(j + 1, j) = next;
      if (next < 1e-13 * (1.0 + hess.topLeftCorner(j + 1, j + 1).cwiseAbs().maxCoeff())) {
        dim = j + 1;
        breakdown = true;
        break;
      }
      basis.col(j + 1) = w / next;
    }
    // The projected matrix is Hermitian tridiagonal up to rounding.
    const DenseMatrix t = hess.topLeftCorner(dim, dim);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(0.5 * (t + t.adjoint()));
    const double tail = breakdown ? 0.0 : std::abs(hess(dim, dim - 1));
    auto small_exp = [&](double step) {
      const Eigen::VectorXcd phases =
          (eig.eigenvalues().cast<Complex>() * Complex(0.0, -step)).array().exp().matrix();
      return Eigen::VectorXcd(eig.eigenvectors() * phases.asDiagonal() *
                              eig.eigenvectors().row(0).adjoint());
    };
    h = std::min(h, remaining);
    Eigen::VectorXcd coeffs = small_exp(h);
    int shrink = 0;
    while (tail * std::abs(coeffs[dim - 1]) > config_.rel_tol * (h / dt_)) {
      if (++shrink > 60) throw NumericalError("Krylov step size underflow");
      h *= 0.5;
      coeffs = small_exp(h);
    }
    state = beta * (basis.leftCols(dim) * coeffs);
    if (!all_finite(state.data(), n)) throw NumericalError("non-finite amplitude in Krylov step");
    remaining -= h;
    if (remaining < 1e-15 * dt_) break;
    if (shrink == 0) h *= 2.0;
  }
}

StateVector evolve(const StateVector& state, const SparseOperator& hamiltonian, double dt,
                   const PropagatorConfig& config) {
  StateVector out = state;
  Propagator(hamiltonian, dt, config).apply(out);
  return out;
}

}  // namespace colltraj
