#include "colltraj/collision.hpp"

#include <cmath>
#include <string>

#include "colltraj/errors.hpp"

namespace colltraj {

void validate_scheme(const MeasurementScheme& scheme, const ModeLayout& layout) {
  if (std::holds_alternative<Photodetection>(scheme)) {
    if (layout.lo_dim != 0) throw InvalidArgument("photodetection requires lo_dim = 0");
    return;
  }
  const auto& h = std::get<Homodyne>(scheme);
  if (h.lo_dim < 2) throw InvalidArgument("homodyne detection requires lo_dim >= 2");
  if (layout.lo_dim != h.lo_dim) throw InvalidArgument("layout lo_dim differs from the homodyne lo_dim");
  if (!(h.amplitude >= 0.0) || !std::isfinite(h.amplitude))
    throw InvalidArgument("local oscillator amplitude must be finite and >= 0");
  if (!std::isfinite(h.phase)) throw InvalidArgument("local oscillator phase must be finite");
}

HomodyneEigensystem homodyne_eigensystem(int lo_dim) {
  if (lo_dim < 2) throw InvalidArgument("homodyne eigensystem needs lo_dim >= 2");
  HomodyneEigensystem eig;
  eig.lo_dim = lo_dim;
  eig.vectors.reserve(2 * lo_dim);
  eig.vectors.push_back({0, 0.0, 0, 1.0, -1, 0.0});
  eig.vectors.push_back({0, 0.0, -1, 0.0, lo_dim - 1, 1.0});
  const double r = 1.0 / std::sqrt(2.0);
  for (int n = 1; n < lo_dim; ++n) {
    const double root = std::sqrt(static_cast<double>(n));
    eig.vectors.push_back({n, root, n, r, n - 1, r});
    eig.vectors.push_back({-n, -root, n, r, n - 1, -r});
  }
  return eig;
}

std::vector<Complex> coherent_amplitudes(Complex beta, int dim, double max_leakage) {
  if (dim < 1) throw InvalidArgument("coherent state dimension must be >= 1");
  std::vector<Complex> out(dim, Complex{});
  const double mag = std::abs(beta);
  if (mag == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const double phase = std::arg(beta);
  std::vector<double> weight(dim);
  double kept = 0.0;
  for (int n = 0; n < dim; ++n) {
    weight[n] = std::exp(-mag * mag + 2.0 * n * std::log(mag) - std::lgamma(n + 1.0));
    kept += weight[n];
  }
  if (1.0 - kept > max_leakage)
    throw InvalidArgument("coherent state truncation discards " + std::to_string(1.0 - kept) +
                          " of its weight; increase lo_dim");
  for (int n = 0; n < dim; ++n) out[n] = std::sqrt(weight[n] / kept) * std::exp(Complex(0.0, n * phase));
  return out;
}

void prepare_lo(StateVector& state, const BasisEnumeration& basis, Complex beta) {
  const ModeLayout& lay = basis.layout();
  if (!lay.has_lo()) throw InvalidArgument("layout has no local oscillator");
  if (state.size() != basis.dimension()) throw InvalidArgument("state dimension mismatch");
  const Index L = lay.lo_dim;
  const Index outer = basis.system_dim() * basis.env_size();
  double excited = 0.0;
  for (Index o = 0; o < outer; ++o)
    for (Index l = 1; l < L; ++l) excited += std::norm(state[o * L + l]);
  if (excited > 1e-10 * std::max(1.0, state.squaredNorm()))
    throw PreconditionError("local oscillator is not in its vacuum before preparation");
  const auto coeffs = coherent_amplitudes(beta, static_cast<int>(L));
  for (Index o = 0; o < outer; ++o) {
    const Complex v = state[o * L];
    for (Index l = 0; l < L; ++l) state[o * L + l] = v * coeffs[l];
  }
}

std::size_t sample_outcome(std::span<const double> probabilities, double uniform, double sum_tolerance) {
  if (probabilities.empty()) throw InvalidArgument("no outcomes to sample");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= -1e-12)) throw NumericalError("outcome probability is negative or NaN");
    total += std::max(p, 0.0);
  }
  if (std::abs(total - 1.0) > sum_tolerance)
    throw NumericalError("outcome probabilities sum to " + std::to_string(total));
  const double target = uniform * total;
  double cumulative = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = std::max(probabilities[i], 0.0);
    if (p == 0.0) continue;
    last_nonzero = i;
    cumulative += p;
    if (target < cumulative) return i;
  }
  return last_nonzero;
}

std::size_t sample_outcome(std::span<const double> probabilities, Rng& rng, double sum_tolerance) {
  return sample_outcome(probabilities, rng.uniform(), sum_tolerance);
}

std::vector<double> photodetection_probabilities(const StateVector& state, const BasisEnumeration& basis) {
  if (state.size() != basis.dimension()) throw InvalidArgument("state dimension mismatch");
  const Index E = basis.env_size();
  const Index L = basis.lo_block();
  double p0 = 0.0, p1 = 0.0;
  for (Index s = 0; s < basis.system_dim(); ++s)
    for (Index e = 0; e < E; ++e) {
      const Index base = basis.compose(static_cast<int>(s), e, 0);
      double acc = 0.0;
      for (Index l = 0; l < L; ++l) acc += std::norm(state[base + l]);
      (basis.env_site0_occupied(e) ? p1 : p0) += acc;
    }
  return {p0, p1};
}

MeasurementOutcome measure_photo(StateVector& state, const BasisEnumeration& basis, Rng& rng) {
  const auto probs = photodetection_probabilities(state, basis);
  const std::size_t k = sample_outcome(probs, rng);
  const double total = probs[0] + probs[1];
  const bool click = (k == 1);
  const Index E = basis.env_size();
  const Index L = basis.lo_block();
  StateVector out = StateVector::Zero(state.size());
  const double scale = 1.0 / std::sqrt(probs[k]);
  for (Index s = 0; s < basis.system_dim(); ++s)
    for (Index e = 0; e < E; ++e) {
      if (basis.env_site0_occupied(e) != click) continue;
      const Index from = basis.compose(static_cast<int>(s), e, 0);
      const Index to = basis.compose(static_cast<int>(s), basis.env_clear_site0(e), 0);
      for (Index l = 0; l < L; ++l) out[to + l] = state[from + l] * scale;
    }
  state.swap(out);
  return {click ? 1 : 0, click ? 1.0 : 0.0, probs[k] / total};
}

namespace {

// Visit every (system level, site-0-empty configuration) pair with the
// indices of its site-0-empty and site-0-filled partners (the latter -1 if
// the cap forbids it), excluding the LO offset.
template <class F>
void for_each_site0_pair(const BasisEnumeration& basis, F&& f) {
  const Index E = basis.env_size();
  for (Index s = 0; s < basis.system_dim(); ++s)
    for (Index e = 0; e < E; ++e) {
      if (basis.env_site0_occupied(e)) continue;
      const Index filled = basis.env_set_site0(e);
      f(basis.compose(static_cast<int>(s), e, 0),
        filled < 0 ? Index{-1} : basis.compose(static_cast<int>(s), filled, 0));
    }
}

MeasurementOutcome finish_homodyne(StateVector& state, StateVector projected, const QEigenvector& q,
                                   double probability, double total) {
  projected /= std::sqrt(probability);
  state.swap(projected);
  return {q.label, q.eigenvalue, probability / total};
}

}  // namespace

std::vector<double> homodyne_probabilities(const StateVector& state, const BasisEnumeration& basis,
                                           const HomodyneEigensystem& eig) {
  if (state.size() != basis.dimension()) throw InvalidArgument("state dimension mismatch");
  if (basis.layout().lo_dim != eig.lo_dim) throw InvalidArgument("eigensystem lo_dim differs from the layout");
  std::vector<double> probs(eig.vectors.size(), 0.0);
  for_each_site0_pair(basis, [&](Index empty, Index filled) {
    for (std::size_t k = 0; k < eig.vectors.size(); ++k) {
      const QEigenvector& q = eig.vectors[k];
      Complex r{};
      if (q.lo_unexcited >= 0) r += q.coeff_unexcited * state[empty + q.lo_unexcited];
      if (q.lo_excited >= 0 && filled >= 0) r += q.coeff_excited * state[filled + q.lo_excited];
      probs[k] += std::norm(r);
    }
  });
  return probs;
}

StateVector homodyne_project(const StateVector& state, const BasisEnumeration& basis, const QEigenvector& q) {
  StateVector out = StateVector::Zero(state.size());
  for_each_site0_pair(basis, [&](Index empty, Index filled) {
    Complex r{};
    if (q.lo_unexcited >= 0) r += q.coeff_unexcited * state[empty + q.lo_unexcited];
    if (q.lo_excited >= 0 && filled >= 0) r += q.coeff_excited * state[filled + q.lo_excited];
    out[empty] = r;
  });
  return out;
}

MeasurementOutcome measure_homodyne(StateVector& state, const BasisEnumeration& basis,
                                    const HomodyneEigensystem& eig, Rng& rng) {
  const auto probs = homodyne_probabilities(state, basis, eig);
  const std::size_t k = sample_outcome(probs, rng);
  double total = 0.0;
  for (double p : probs) total += p;
  return finish_homodyne(state, homodyne_project(state, basis, eig.vectors[k]), eig.vectors[k], probs[k], total);
}

std::vector<double> homodyne_probabilities_factored(const StateVector& state, const BasisEnumeration& basis,
                                                    const HomodyneEigensystem& eig,
                                                    std::span<const Complex> lo_amplitudes) {
  if (basis.layout().has_lo()) throw InvalidArgument("factored homodyne expects a layout without LO");
  if (state.size() != basis.dimension()) throw InvalidArgument("state dimension mismatch");
  if (static_cast<int>(lo_amplitudes.size()) != eig.lo_dim) throw InvalidArgument("LO amplitude length != lo_dim");
  // Every probability is a quadratic form in (ψ₀, ψ₁), the site-0-empty and
  // site-0-filled parts, so three overlaps suffice.
  double empty2 = 0.0, filled2 = 0.0;
  Complex cross{};
  for_each_site0_pair(basis, [&](Index empty, Index filled) {
    empty2 += std::norm(state[empty]);
    if (filled >= 0) {
      filled2 += std::norm(state[filled]);
      cross += std::conj(state[empty]) * state[filled];
    }
  });
  std::vector<double> probs(eig.vectors.size(), 0.0);
  for (std::size_t k = 0; k < eig.vectors.size(); ++k) {
    const QEigenvector& q = eig.vectors[k];
    const Complex a = q.lo_unexcited >= 0 ? q.coeff_unexcited * lo_amplitudes[q.lo_unexcited] : Complex{};
    const Complex b = q.lo_excited >= 0 ? q.coeff_excited * lo_amplitudes[q.lo_excited] : Complex{};
    probs[k] = std::norm(a) * empty2 + std::norm(b) * filled2 + 2.0 * std::real(std::conj(a) * b * cross);
  }
  return probs;
}

StateVector homodyne_project_factored(const StateVector& state, const BasisEnumeration& basis,
                                      const QEigenvector& q, std::span<const Complex> lo_amplitudes) {
  const Complex a = q.lo_unexcited >= 0 ? q.coeff_unexcited * lo_amplitudes[q.lo_unexcited] : Complex{};
  const Complex b = q.lo_excited >= 0 ? q.coeff_excited * lo_amplitudes[q.lo_excited] : Complex{};
  StateVector out = StateVector::Zero(state.size());
  for_each_site0_pair(basis, [&](Index empty, Index filled) {
    out[empty] = a * state[empty] + (filled >= 0 ? b * state[filled] : Complex{});
  });
  return out;
}

MeasurementOutcome measure_homodyne_factored(StateVector& state, const BasisEnumeration& basis,
                                             const HomodyneEigensystem& eig,
                                             std::span<const Complex> lo_amplitudes, Rng& rng) {
  const auto probs = homodyne_probabilities_factored(state, basis, eig, lo_amplitudes);
  const std::size_t k = sample_outcome(probs, rng);
  double total = 0.0;
  for (double p : probs) total += p;
  return finish_homodyne(state, homodyne_project_factored(state, basis, eig.vectors[k], lo_amplitudes),
                         eig.vectors[k], probs[k], total);
}

void apply_shift(StateVector& state, const BasisEnumeration& basis, StateVector& scratch) {
  if (state.size() != basis.dimension()) throw InvalidArgument("state dimension mismatch");
  const Index E = basis.env_size();
  const Index L = basis.lo_block();
  double occupied = 0.0;
  scratch.setZero(state.size());
  for (Index s = 0; s < basis.system_dim(); ++s)
    for (Index e = 0; e < E; ++e) {
      const Index from = basis.compose(static_cast<int>(s), e, 0);
      if (basis.env_site0_occupied(e)) {
        for (Index l = 0; l < L; ++l) occupied += std::norm(state[from + l]);
        continue;
      }
      const Index to = basis.compose(static_cast<int>(s), basis.env_shifted(e), 0);
      for (Index l = 0; l < L; ++l) scratch[to + l] = state[from + l];
    }
  if (occupied > 1e-10)
    throw PreconditionError("shift requires environment site 0 in its vacuum (occupied weight " +
                            std::to_string(occupied) + ")");
  state.swap(scratch);
}

StateVector apply_shift(const StateVector& state, const BasisEnumeration& basis) {
  StateVector out = state;
  StateVector scratch;
  apply_shift(out, basis, scratch);
  return out;
}

}  // namespace colltraj
