#include <gtest/gtest.h>

#include <random>

#include "colltraj/errors.hpp"
#include "colltraj/model.hpp"
#include "colltraj/propagator.hpp"
#include "test_support.hpp"

using namespace colltraj;
using testing_support::dense_unitary;
using testing_support::random_hermitian;
using testing_support::random_state;

namespace {

const PropagatorMethod kMethods[] = {PropagatorMethod::kRungeKutta, PropagatorMethod::kKrylov,
                                     PropagatorMethod::kBlockExponential, PropagatorMethod::kAuto};

PropagatorConfig with(PropagatorMethod m) {
  PropagatorConfig c;
  c.method = m;
  return c;
}

SparseOperator sparse(const DenseMatrix& m) { return SparseOperator(m.sparseView()); }

}  // namespace

class PropagatorMethods : public ::testing::TestWithParam<PropagatorMethod> {};

TEST_P(PropagatorMethods, ZeroHamiltonianIsIdentity) {
  std::mt19937_64 gen(1);
  const StateVector psi = random_state(12, gen);
  const SparseOperator h(12, 12);
  EXPECT_EQ((evolve(psi, h, 0.3, with(GetParam())) - psi).cwiseAbs().maxCoeff(), 0.0);
}

TEST_P(PropagatorMethods, RabiOscillation) {
  BasisEnumeration b(ModeLayout{2, 1, 1, 0});
  const SparseOperator h = build_system_h(b, DrivenQubit{0.8});
  StateVector psi = StateVector::Zero(b.dimension());
  psi(b.compose(0, 0, 0)) = 1.0;
  const double dt = 0.05;
  Propagator prop(h, dt, with(GetParam()));
  for (int step = 1; step <= 40; ++step) {
    prop.apply(psi);
    const double excited = std::norm(psi(b.compose(1, 0, 0)));
    ASSERT_NEAR(excited, std::pow(std::sin(0.8 * step * dt), 2), 1e-8) << "step " << step;
  }
}

TEST_P(PropagatorMethods, MatchesDenseExponential) {
  std::mt19937_64 gen(2);
  for (Index dim : {2, 7, 33, 64}) {
    const DenseMatrix h = random_hermitian(dim, gen, 0.3);
    const StateVector psi = random_state(dim, gen);
    const double dt = 0.37;
    const StateVector ref = dense_unitary(h, dt) * psi;
    const StateVector out = evolve(psi, sparse(h), dt, with(GetParam()));
    EXPECT_LT((out - ref).cwiseAbs().maxCoeff(), 1e-8) << "dim " << dim;
  }
}

TEST_P(PropagatorMethods, Unitarity) {
  std::mt19937_64 gen(3);
  for (Index dim : {16, 100, 256}) {
    const DenseMatrix h = random_hermitian(dim, gen, 0.05);
    StateVector psi = random_state(dim, gen);
    Propagator prop(sparse(h), 0.2, with(GetParam()));
    for (int k = 0; k < 5; ++k) prop.apply(psi);
    EXPECT_LT(std::abs(psi.squaredNorm() - 1.0), 1e-9) << "dim " << dim;
  }
}

TEST_P(PropagatorMethods, Composition) {
  std::mt19937_64 gen(4);
  const DenseMatrix h = random_hermitian(40, gen, 0.2);
  const StateVector psi = random_state(40, gen);
  const auto cfg = with(GetParam());
  const StateVector twice = evolve(evolve(psi, sparse(h), 0.25, cfg), sparse(h), 0.25, cfg);
  const StateVector once = evolve(psi, sparse(h), 0.5, cfg);
  EXPECT_LT((twice - once).cwiseAbs().maxCoeff(), 1e-8);
}

TEST_P(PropagatorMethods, OneStepPointCouplingAmplitudes) {
  // From |e,0⟩: |e,0⟩ → 1 − γΔt/2, |g,1⟩ → −i√(γΔt), up to O(Δt^{3/2}).
  BasisEnumeration b(ModeLayout{2, 1, 1, 0});
  const double rate = 1.0;
  for (double dt : {1e-2, 1e-3}) {
    const SparseOperator h = build_interaction(b, build_coupling(PointCoupling{rate}, 1, dt), dt);
    StateVector psi = StateVector::Zero(4);
    psi(b.compose(1, 0, 0)) = 1.0;
    const StateVector out = evolve(psi, h, dt, with(GetParam()));
    const double bound = 2.0 * std::pow(rate * dt, 1.5);
    EXPECT_LT(std::abs(out(b.compose(1, 0, 0)) - (1.0 - rate * dt / 2)), bound);
    EXPECT_LT(std::abs(out(b.compose(0, 1, 0)) - Complex(0.0, -std::sqrt(rate * dt))), bound);
  }
}

INSTANTIATE_TEST_SUITE_P(All, PropagatorMethods, ::testing::ValuesIn(kMethods));

TEST(Propagator, AutoResolvesByBlockSize) {
  std::mt19937_64 gen(5);
  DenseMatrix h = DenseMatrix::Zero(20, 20);
  h.topLeftCorner(10, 10) = random_hermitian(10, gen);
  h.bottomRightCorner(10, 10) = random_hermitian(10, gen);
  Propagator small(sparse(h), 0.1, with(PropagatorMethod::kAuto));
  EXPECT_EQ(small.method(), PropagatorMethod::kBlockExponential);
  EXPECT_EQ(small.largest_block(), 10);
  PropagatorConfig tight = with(PropagatorMethod::kAuto);
  tight.max_block = 5;
  EXPECT_EQ(Propagator(sparse(h), 0.1, tight).method(), PropagatorMethod::kKrylov);
  PropagatorConfig strict = with(PropagatorMethod::kBlockExponential);
  strict.max_block = 5;
  EXPECT_THROW(Propagator(sparse(h), 0.1, strict), InvalidArgument);
}

TEST(Propagator, ConnectedBlocks) {
  DenseMatrix h = DenseMatrix::Zero(6, 6);
  h(0, 3) = h(3, 0) = 1.0;
  h(3, 5) = h(5, 3) = 2.0;
  h(1, 2) = h(2, 1) = 1.0;
  const auto blocks = connected_blocks(sparse(h));
  ASSERT_EQ(blocks.size(), 3u);
  EXPECT_EQ(blocks[0], (std::vector<Index>{0, 3, 5}));
  EXPECT_EQ(blocks[1], (std::vector<Index>{1, 2}));
  EXPECT_EQ(blocks[2], (std::vector<Index>{4}));
}

TEST(Propagator, RejectsNonHermitian) {
  DenseMatrix h = DenseMatrix::Zero(2, 2);
  h(0, 1) = 1.0;
  EXPECT_THROW(Propagator(sparse(h), 0.1), InvalidArgument);
}

TEST(Propagator, RejectsBadConfig) {
  PropagatorConfig c;
  c.rel_tol = 1e-3;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.rel_tol = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.krylov_dim = 1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_THROW(Propagator(SparseOperator(2, 2), 0.0), InvalidArgument);
}

TEST(Propagator, SubstepBudgetIsEnforced) {
  std::mt19937_64 gen(6);
  const DenseMatrix h = 1e3 * random_hermitian(20, gen);
  PropagatorConfig c = with(PropagatorMethod::kRungeKutta);
  c.max_substeps = 3;
  StateVector psi = random_state(20, gen);
  EXPECT_THROW(Propagator(sparse(h), 1.0, c).apply(psi), NumericalError);
}

TEST(Propagator, NaNInputFailsFast) {
  std::mt19937_64 gen(7);
  const DenseMatrix h = random_hermitian(8, gen);
  for (PropagatorMethod m : {PropagatorMethod::kRungeKutta, PropagatorMethod::kKrylov}) {
    StateVector psi = random_state(8, gen);
    psi(3) = Complex(std::nan(""), 0.0);
    EXPECT_THROW(Propagator(sparse(h), 0.1, with(m)).apply(psi), NumericalError);
  }
}
