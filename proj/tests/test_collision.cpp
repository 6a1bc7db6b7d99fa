#include <gtest/gtest.h>

#include <map>
#include <random>

#include "colltraj/collision.hpp"
#include "colltraj/errors.hpp"
#include "colltraj/model.hpp"
#include "colltraj/propagator.hpp"
#include "test_support.hpp"

using namespace colltraj;
using testing_support::random_state;

namespace {

// Dense qubit ⊗ LO operators, index q·d + n.
DenseMatrix dense_b(int d) {
  DenseMatrix b = DenseMatrix::Zero(2 * d, 2 * d);
  for (int n = 0; n < d; ++n) b(n, d + n) = 1.0;
  return b;
}
DenseMatrix dense_c(int d) {
  DenseMatrix c = DenseMatrix::Zero(2 * d, 2 * d);
  for (int q = 0; q < 2; ++q)
    for (int n = 1; n < d; ++n) c(q * d + n - 1, q * d + n) = std::sqrt(double(n));
  return c;
}
Eigen::VectorXcd dense_vector(const QEigenvector& v, int d) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(2 * d);
  if (v.lo_unexcited >= 0) out(v.lo_unexcited) = v.coeff_unexcited;
  if (v.lo_excited >= 0) out(d + v.lo_excited) = v.coeff_excited;
  return out;
}

// |ψ_S⟩ ⊗ vacuum on the given layout.
StateVector product_state(const BasisEnumeration& b, const Eigen::VectorXcd& system) {
  StateVector psi = StateVector::Zero(b.dimension());
  for (Index s = 0; s < system.size(); ++s) psi(b.compose(static_cast<int>(s), 0, 0)) = system(s);
  return psi;
}

// Unnormalized system vector of a state whose environment and LO are vacuum.
Eigen::VectorXcd system_part(const BasisEnumeration& b, const StateVector& psi) {
  Eigen::VectorXcd out(b.system_dim());
  for (Index s = 0; s < b.system_dim(); ++s) out(s) = psi(b.compose(static_cast<int>(s), 0, 0));
  return out;
}

double fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm());
}

SparseOperator point_h(const BasisEnumeration& b, double rate, double dt) {
  return build_interaction(b, build_coupling(PointCoupling{rate}, b.layout().env_count, dt), dt);
}

}  // namespace

TEST(HomodyneEigensystem, CompleteOrthonormalEigenbasis) {
  for (int d : {2, 3, 6}) {
    const HomodyneEigensystem eig = homodyne_eigensystem(d);
    ASSERT_EQ(eig.vectors.size(), static_cast<std::size_t>(2 * d));
    const DenseMatrix b = dense_b(d), c = dense_c(d);
    const DenseMatrix q = c.adjoint() * b + b.adjoint() * c;
    DenseMatrix v(2 * d, 2 * d);
    for (int k = 0; k < 2 * d; ++k) {
      v.col(k) = dense_vector(eig.vectors[k], d);
      EXPECT_LT((q * v.col(k) - eig.vectors[k].eigenvalue * v.col(k)).norm(), 1e-14) << "d=" << d << " k=" << k;
    }
    EXPECT_LT((v.adjoint() * v - DenseMatrix::Identity(2 * d, 2 * d)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(HomodyneEigensystem, OrderingAndLabels) {
  const HomodyneEigensystem eig = homodyne_eigensystem(4);
  EXPECT_EQ(eig.vectors[0].lo_unexcited, 0);
  EXPECT_EQ(eig.vectors[0].eigenvalue, 0.0);
  EXPECT_EQ(eig.vectors[1].lo_excited, 3);
  EXPECT_EQ(eig.vectors[1].eigenvalue, 0.0);
  EXPECT_EQ(eig.vectors[2].label, 1);
  EXPECT_EQ(eig.vectors[3].label, -1);
  EXPECT_NEAR(eig.vectors[6].eigenvalue, std::sqrt(3.0), 1e-15);
  EXPECT_EQ(eig.vectors[7].label, -3);
  EXPECT_THROW(homodyne_eigensystem(1), InvalidArgument);
}

TEST(HomodyneEigensystem, NumberOperatorsOnFirstBranch) {
  const int d = 3;
  const DenseMatrix b = dense_b(d), c = dense_c(d);
  const DenseMatrix n_plus = 0.5 * (b + c).adjoint() * (b + c);
  const DenseMatrix n_minus = 0.5 * (b - c).adjoint() * (b - c);
  const Eigen::VectorXcd one_plus = dense_vector(homodyne_eigensystem(d).vectors[2], d);
  EXPECT_LT((n_plus * one_plus - one_plus).norm(), 1e-15);
  EXPECT_LT((n_minus * one_plus).norm(), 1e-15);
  // Eigenvalues (n ± √n)/2 of N± on the n = 2 branch.
  const Eigen::VectorXcd two_plus = dense_vector(homodyne_eigensystem(d).vectors[4], d);
  EXPECT_LT((n_plus * two_plus - 0.5 * (2 + std::sqrt(2.0)) * two_plus).norm(), 1e-14);
}

TEST(CoherentState, VacuumForZeroAmplitude) {
  const auto a = coherent_amplitudes(0.0, 5);
  EXPECT_EQ(a[0], Complex(1.0));
  for (int n = 1; n < 5; ++n) EXPECT_EQ(a[n], Complex(0.0));
}

TEST(CoherentState, MeanPhotonNumberAndNorm) {
  const auto a = coherent_amplitudes(std::polar(1.0, 0.4), 250);
  double norm = 0.0, mean = 0.0;
  for (int n = 0; n < 250; ++n) {
    norm += std::norm(a[n]);
    mean += n * std::norm(a[n]);
  }
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_NEAR(mean, 1.0, 1e-10);
  // ⟨C⟩ = β
  Complex c{};
  for (int n = 1; n < 250; ++n) c += std::conj(a[n - 1]) * std::sqrt(double(n)) * a[n];
  EXPECT_NEAR(std::abs(c - std::polar(1.0, 0.4)), 0.0, 1e-10);
}

TEST(CoherentState, TruncationLeakageIsAnError) {
  EXPECT_THROW(coherent_amplitudes(2.0, 4), InvalidArgument);
  EXPECT_NO_THROW(coherent_amplitudes(2.0, 40));
}

TEST(PrepareLo, ReplacesVacuumFactor) {
  BasisEnumeration b(ModeLayout{2, 2, 1, 8});
  std::mt19937_64 gen(1);
  StateVector psi = StateVector::Zero(b.dimension());
  const StateVector sys = random_state(2, gen);
  psi(b.compose(0, 0, 0)) = sys(0);
  psi(b.compose(1, 1, 0)) = sys(1);
  const Complex beta(0.3, -0.2);
  prepare_lo(psi, b, beta);
  const auto coh = coherent_amplitudes(beta, 8);
  for (int l = 0; l < 8; ++l) {
    EXPECT_NEAR(std::abs(psi(b.compose(0, 0, l)) - sys(0) * coh[l]), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(psi(b.compose(1, 1, l)) - sys(1) * coh[l]), 0.0, 1e-15);
  }
  EXPECT_NEAR(psi.squaredNorm(), 1.0, 1e-12);
  EXPECT_THROW(prepare_lo(psi, b, beta), PreconditionError);
}

TEST(SampleOutcome, Deterministic) {
  const std::vector<double> p{1.0, 0.0, 0.0};
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_outcome(p, rng), 0u);
  const std::vector<double> half{0.5, 0.5};
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_outcome(half, a), sample_outcome(half, b));
}

TEST(SampleOutcome, EmpiricalFrequencies) {
  const std::vector<double> p{0.1, 0.25, 0.0, 0.65};
  Rng rng(99);
  const int draws = 100000;
  std::vector<int> counts(p.size());
  for (int i = 0; i < draws; ++i) ++counts[sample_outcome(p, rng)];
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double sigma = std::sqrt(p[k] * (1 - p[k]) / draws);
    EXPECT_LE(std::abs(counts[k] / double(draws) - p[k]), 4 * sigma + 1e-15) << "outcome " << k;
  }
  EXPECT_EQ(counts[2], 0);
}

TEST(SampleOutcome, ClampsAndValidates) {
  EXPECT_EQ(sample_outcome(std::vector<double>{-1e-13, 1.0}, 0.0), 1u);
  EXPECT_THROW(sample_outcome(std::vector<double>{-1e-6, 1.0}, 0.5), NumericalError);
  EXPECT_THROW(sample_outcome(std::vector<double>{0.5, 0.4}, 0.5), NumericalError);
  EXPECT_THROW(sample_outcome(std::vector<double>{}, 0.5), InvalidArgument);
  EXPECT_EQ(sample_outcome(std::vector<double>{0.3, 0.7}, 0.29999), 0u);
  EXPECT_EQ(sample_outcome(std::vector<double>{0.3, 0.7}, 0.3), 1u);
}

TEST(Photodetection, VacuumSiteGivesNoClick) {
  BasisEnumeration b(ModeLayout{2, 3, 2, 0});
  std::mt19937_64 gen(2);
  StateVector psi = product_state(b, random_state(2, gen));
  const StateVector before = psi;
  Rng rng(1);
  const MeasurementOutcome out = measure_photo(psi, b, rng);
  EXPECT_EQ(out.label, 0);
  EXPECT_DOUBLE_EQ(out.probability, 1.0);
  EXPECT_LT((psi - before).norm(), 1e-15);
}


namespace {

// Measures copies of `state` with successive seeds until `wanted` comes up.
StateVector photo_branch(const StateVector& state, const BasisEnumeration& b, int wanted) {
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    StateVector psi = state;
    Rng rng(seed);
    if (measure_photo(psi, b, rng).label == wanted) return psi;
  }
  ADD_FAILURE() << "branch " << wanted << " never sampled";
  return state;
}

}  // namespace

TEST(Photodetection, ClickProbabilityIsSecondOrderAccurate) {
  const double rate = 1.3;
  BasisEnumeration b(ModeLayout{3, 1, 1, 0});
  std::mt19937_64 gen(4);
  const Eigen::VectorXcd sys = random_state(3, gen);
  const DenseMatrix a = lowering_matrix(3);
  const double n_mean = sys.dot(a.adjoint() * a * sys).real();
  std::vector<double> dts{1e-2, 1e-3, 1e-4}, errors;
  for (double dt : dts) {
    const StateVector evolved = evolve(product_state(b, sys), point_h(b, rate, dt), dt);
    const auto p = photodetection_probabilities(evolved, b);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-10);
    errors.push_back(std::abs(p[1] - rate * n_mean * dt));
  }
  const double slope = testing_support::loglog_slope(dts, errors);
  EXPECT_GT(slope, 1.9);
  EXPECT_LT(slope, 2.1);
  // Stable constant C in |ΔP| ≤ C·Δt².
  EXPECT_NEAR(errors[1] / 1e-6, errors[2] / 1e-8, 0.05 * errors[2] / 1e-8);
}

TEST(Photodetection, ConditionedStates) {
  const double rate = 1.0, dt = 1e-2;
  BasisEnumeration b(ModeLayout{3, 1, 1, 0});
  std::mt19937_64 gen(8);
  const Eigen::VectorXcd sys = random_state(3, gen);
  const DenseMatrix a = lowering_matrix(3);
  const StateVector evolved = evolve(product_state(b, sys), point_h(b, rate, dt), dt);

  const StateVector clicked = photo_branch(evolved, b, 1);
  EXPECT_NEAR(clicked.squaredNorm(), 1.0, 1e-12);
  EXPECT_GT(fidelity(system_part(b, clicked), a * sys), 1.0 - 1e-3);

  const StateVector silent = photo_branch(evolved, b, 0);
  const Eigen::VectorXcd no_jump = sys - 0.5 * dt * rate * a.adjoint() * a * sys;
  EXPECT_GT(fidelity(system_part(b, silent), no_jump), 1.0 - 1e-6);
  // The site is reset: measuring again gives no click with certainty.
  const auto again = photodetection_probabilities(clicked, b);
  EXPECT_NEAR(again[0], 1.0, 1e-14);
}

TEST(Photodetection, ProbabilitiesComplete) {
  std::mt19937_64 gen(10);
  for (ModeLayout l : {ModeLayout{2, 5, 2, 0}, ModeLayout{3, 4, 4, 0}}) {
    BasisEnumeration b(l);
    for (int t = 0; t < 10; ++t) {
      const auto p = photodetection_probabilities(random_state(b.dimension(), gen), b);
      EXPECT_NEAR(p[0] + p[1], 1.0, 1e-10);
    }
  }
}

namespace {

struct HomodyneStep {
  BasisEnumeration basis;
  HomodyneEigensystem eig;
  StateVector state;  // after the coherent step, explicit LO
};

HomodyneStep homodyne_step(const Eigen::VectorXcd& sys, double rate, double alpha, double theta, double dt,
                           int lo_dim) {
  HomodyneStep h{BasisEnumeration(ModeLayout{static_cast<int>(sys.size()), 1, 1, lo_dim}),
                 homodyne_eigensystem(lo_dim), {}};
  StateVector psi = product_state(h.basis, sys);
  prepare_lo(psi, h.basis, std::polar(alpha * std::sqrt(dt), theta));
  h.state = evolve(psi, point_h(h.basis, rate, dt), dt);
  return h;
}

// J± = (α e^{iθ} ∓ i√γ a)/√2
DenseMatrix jump(int dim, double rate, double alpha, double theta, int sign) {
  return (std::polar(alpha, theta) * DenseMatrix::Identity(dim, dim) -
          Complex(0.0, sign * std::sqrt(rate)) * lowering_matrix(dim)) /
         std::sqrt(2.0);
}

}  // namespace

TEST(Homodyne, VacuumQubitAndOscillatorGiveZero) {
  BasisEnumeration b(ModeLayout{2, 2, 1, 4});
  const HomodyneEigensystem eig = homodyne_eigensystem(4);
  std::mt19937_64 gen(12);
  StateVector psi = product_state(b, random_state(2, gen));
  const StateVector before = psi;
  const auto p = homodyne_probabilities(psi, b, eig);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  Rng rng(5);
  const MeasurementOutcome out = measure_homodyne(psi, b, eig, rng);
  EXPECT_EQ(out.eigenvalue, 0.0);
  EXPECT_NEAR(out.probability, 1.0, 1e-15);
  EXPECT_LT((psi - before).norm(), 1e-15);
}

TEST(Homodyne, ProbabilitiesComplete) {
  std::mt19937_64 gen(13);
  for (int lo : {2, 5, 12}) {
    BasisEnumeration b(ModeLayout{2, 3, 2, lo});
    BasisEnumeration bare(ModeLayout{2, 3, 2, 0});
    const HomodyneEigensystem eig = homodyne_eigensystem(lo);
    for (int t = 0; t < 5; ++t) {
      double total = 0.0;
      for (double p : homodyne_probabilities(random_state(b.dimension(), gen), b, eig)) total += p;
      EXPECT_NEAR(total, 1.0, 1e-10);
      const auto coh = coherent_amplitudes(Complex(0.2, 0.1), lo, 1e-2);
      total = 0.0;
      for (double p : homodyne_probabilities_factored(random_state(bare.dimension(), gen), bare, eig, coh)) total += p;
      EXPECT_NEAR(total, 1.0, 1e-10);
    }
  }
}

TEST(Homodyne, ConditionedStatesFollowJumpOperators) {
  const double rate = 1.0, alpha = 10.0, theta = 0.3, dt = 0.01;
  std::mt19937_64 gen(14);
  const Eigen::VectorXcd sys = random_state(4, gen);
  const HomodyneStep h = homodyne_step(sys, rate, alpha, theta, dt, 250);
  for (int k : {2, 3}) {
    const QEigenvector& q = h.eig.vectors[k];
    const StateVector projected = homodyne_project(h.state, h.basis, q);
    const Eigen::VectorXcd expect = jump(4, rate, alpha, theta, q.label) * sys;
    EXPECT_GT(fidelity(system_part(h.basis, projected), expect), 1.0 - 1e-3) << "label " << q.label;
  }
}

TEST(Homodyne, OneStepLawConvergesAtFirstOrder) {
  // Eq.-level law: P± = ⟨J±†J±⟩Δt, P₀ = 1 − (α² + γ⟨a†a⟩)Δt.
  const double rate = 1.0, alpha = 1.0, theta = 0.0;
  std::mt19937_64 gen(15);
  const Eigen::VectorXcd sys = random_state(3, gen);
  const DenseMatrix a = lowering_matrix(3);
  std::vector<double> dts{1e-2, 1e-3, 1e-4}, rel_plus, rel_minus;
  for (double dt : dts) {
    const HomodyneStep h = homodyne_step(sys, rate, alpha, theta, dt, 30);
    const auto p = homodyne_probabilities(h.state, h.basis, h.eig);
    const double ref_plus = (jump(3, rate, alpha, theta, +1) * sys).squaredNorm() * dt;
    const double ref_minus = (jump(3, rate, alpha, theta, -1) * sys).squaredNorm() * dt;
    rel_plus.push_back(std::abs(p[2] - ref_plus) / ref_plus);
    rel_minus.push_back(std::abs(p[3] - ref_minus) / ref_minus);
    const double p0 = p[0] + p[1];
    const double ref0 = 1.0 - (alpha * alpha + rate * sys.dot(a.adjoint() * a * sys).real()) * dt;
    EXPECT_LT(std::abs(p0 - ref0), 5.0 * dt * dt * (1 + alpha * alpha) * (1 + alpha * alpha));
  }
  for (const auto* rel : {&rel_plus, &rel_minus}) {
    const double slope = testing_support::loglog_slope(dts, *rel);
    EXPECT_GT(slope, 0.9);
    EXPECT_LT(slope, 1.1);
  }
}

TEST(Homodyne, GammaZeroGivesSymmetricOutcomes) {
  const double alpha = 2.0, dt = 1e-3;
  std::mt19937_64 gen(16);
  const HomodyneStep h = homodyne_step(random_state(2, gen), 0.0, alpha, 0.7, dt, 20);
  const auto p = homodyne_probabilities(h.state, h.basis, h.eig);
  EXPECT_NEAR(p[2], p[3], 1e-15);
  EXPECT_NEAR(p[2], alpha * alpha * dt / 2, 2 * std::pow(alpha * alpha * dt, 2));
}

TEST(Homodyne, FactoredMatchesExplicit) {
  const double rate = 0.8, alpha = 3.0, theta = 1.1, dt = 0.01;
  const int lo = 40;
  std::mt19937_64 gen(17);
  const Eigen::VectorXcd sys = random_state(3, gen);
  const HomodyneStep h = homodyne_step(sys, rate, alpha, theta, dt, lo);

  BasisEnumeration bare(ModeLayout{3, 1, 1, 0});
  const StateVector state = evolve(product_state(bare, sys), point_h(bare, rate, dt), dt);
  const auto coh = coherent_amplitudes(std::polar(alpha * std::sqrt(dt), theta), lo);
  const auto p_explicit = homodyne_probabilities(h.state, h.basis, h.eig);
  const auto p_factored = homodyne_probabilities_factored(state, bare, h.eig, coh);
  ASSERT_EQ(p_explicit.size(), p_factored.size());
  for (std::size_t k = 0; k < p_explicit.size(); ++k) EXPECT_NEAR(p_explicit[k], p_factored[k], 1e-12);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    StateVector full = h.state, fact = state;
    Rng r1(seed), r2(seed);
    const MeasurementOutcome o1 = measure_homodyne(full, h.basis, h.eig, r1);
    const MeasurementOutcome o2 = measure_homodyne_factored(fact, bare, h.eig, coh, r2);
    ASSERT_EQ(o1.label, o2.label);
    EXPECT_NEAR(o1.probability, o2.probability, 1e-12);
    EXPECT_LT((system_part(h.basis, full) - system_part(bare, fact)).norm(), 1e-12);
  }
}

TEST(Homodyne, RejectsMismatchedLayouts) {
  BasisEnumeration b(ModeLayout{2, 1, 1, 3});
  StateVector psi = StateVector::Zero(b.dimension());
  psi(0) = 1.0;
  EXPECT_THROW(homodyne_probabilities(psi, b, homodyne_eigensystem(4)), InvalidArgument);
  EXPECT_THROW(homodyne_probabilities_factored(psi, b, homodyne_eigensystem(3), coherent_amplitudes(0.0, 3)),
               InvalidArgument);
  EXPECT_THROW(validate_scheme(Photodetection{}, ModeLayout{2, 1, 1, 3}), InvalidArgument);
  EXPECT_THROW(validate_scheme(Homodyne{1.0, 0.0, 4}, ModeLayout{2, 1, 1, 3}), InvalidArgument);
  EXPECT_THROW(validate_scheme(Homodyne{-1.0, 0.0, 3}, ModeLayout{2, 1, 1, 3}), InvalidArgument);
  EXPECT_NO_THROW(validate_scheme(Homodyne{1.0, 0.0, 3}, ModeLayout{2, 1, 1, 3}));
}

TEST(Shift, VacuumStaysVacuum) {
  BasisEnumeration b(ModeLayout{2, 4, 2, 0});
  StateVector psi = StateVector::Zero(b.dimension());
  psi(b.compose(1, 0, 0)) = 1.0;
  EXPECT_EQ((apply_shift(psi, b) - psi).norm(), 0.0);
}

TEST(Shift, MovesExcitationsTowardSiteZero) {
  BasisEnumeration b(ModeLayout{1, 5, 2, 0});
  for (int n = 1; n < 5; ++n) {
    StateVector psi = StateVector::Zero(b.dimension());
    std::vector<std::uint8_t> bits(5, 0);
    bits[n] = 1;
    psi(b.index_of({0, bits, 0})) = 1.0;
    const StateVector out = apply_shift(psi, b);
    std::vector<std::uint8_t> moved(5, 0);
    moved[n - 1] = 1;
    EXPECT_EQ(out(b.index_of({0, moved, 0})), Complex(1.0)) << "site " << n;
  }
}

TEST(Shift, MatchesDensePermutation) {
  std::mt19937_64 gen(18);
  for (ModeLayout l : {ModeLayout{2, 6, 2, 0}, ModeLayout{2, 4, 1, 3}, ModeLayout{3, 5, 2, 0}, ModeLayout{1, 6, 1, 0}}) {
    BasisEnumeration b(l);
    testing_support::Relabel r(b);
    // Dense shift on the brute basis: mask (k_{N−1}…k_1, 0) → mask >> 1.
    DenseMatrix shift = DenseMatrix::Zero(b.dimension(), b.dimension());
    for (std::size_t j = 0; j < r.states.size(); ++j) {
      const auto& o = r.states[j];
      if (o.mask & 1u) continue;
      shift(r.position.at({o.s, o.mask >> 1, o.lo}), static_cast<Index>(j)) = 1.0;
    }
    StateVector psi = random_state(b.dimension(), gen);
    for (Index i = 0; i < b.dimension(); ++i)
      if (b.occupation_of(i).env_bits[0]) psi(i) = 0.0;
    psi.normalize();
    const StateVector out = apply_shift(psi, b);
    EXPECT_LT((r.to_brute(out) - shift * r.to_brute(psi)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(out.squaredNorm(), 1.0, 1e-14);
  }
}

TEST(Shift, RequiresEmptySiteZero) {
  BasisEnumeration b(ModeLayout{2, 3, 1, 0});
  StateVector psi = StateVector::Zero(b.dimension());
  psi(b.index_of({0, {1, 0, 0}, 0})) = 1e-3;
  psi(0) = std::sqrt(1 - 1e-6);
  EXPECT_THROW(apply_shift(psi, b), PreconditionError);
  psi(b.index_of({0, {1, 0, 0}, 0})) = 1e-6;
  EXPECT_NO_THROW(apply_shift(psi, b));
}
