#include "colltraj/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "colltraj/errors.hpp"

namespace colltraj {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_rate(double rate, const char* what) {
  if (!std::isfinite(rate) || rate < 0.0) throw InvalidArgument(std::string(what) + " must be finite and >= 0");
}

}  // namespace

double CouplingProfile::total_rate() const {
  double acc = 0.0;
  for (const Complex& g : gammas) acc += std::norm(g);
  return acc;
}

CouplingProfile build_coupling(const CouplingVariant& variant, int env_count, double dt) {
  if (env_count < 1) throw InvalidArgument("coupling needs at least one environment site");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  CouplingProfile profile{std::vector<Complex>(env_count, Complex{}), variant, dt};
  auto& g = profile.gammas;
  std::visit(
      Overloaded{
          [&](const PointCoupling& p) {
            require_rate(p.rate, "rate");
            g[0] = std::sqrt(p.rate);
          },
          [&](const TwoPointFeedback& p) {
            require_rate(p.rate, "rate");
            if (p.delay_steps <= 0 || p.delay_steps >= env_count)
              throw InvalidArgument("feedback delay must satisfy 0 < M < env_count");
            g[0] = std::sqrt(p.rate) * std::exp(kI * p.phase);
            g[p.delay_steps] = std::sqrt(p.rate);
          },
          [&](const ExponentialCoupling& p) {
            require_rate(p.rate, "rate");
            if (!(p.memory_rate > 0.0)) throw InvalidArgument("memory_rate must be positive");
            for (int n = 0; n < env_count; ++n)
              g[n] = std::sqrt(p.rate) * p.memory_rate * dt * std::exp(-p.memory_rate * n * dt);
          },
          [&](const RawCoupling& p) {
            if (static_cast<int>(p.amplitudes.size()) > env_count)
              throw InvalidArgument("raw coupling longer than the environment chain");
            std::copy(p.amplitudes.begin(), p.amplitudes.end(), g.begin());
          },
      },
      variant);
  return profile;
}

DenseMatrix lowering_matrix(int dim) {
  DenseMatrix a = DenseMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

DenseMatrix system_hamiltonian_matrix(int dim, const SystemHamiltonianSpec& spec) {
  const DenseMatrix a = lowering_matrix(dim);
  const DenseMatrix ad = a.adjoint();
  return std::visit(
      Overloaded{
          [&](const NoSystemHamiltonian&) -> DenseMatrix { return DenseMatrix::Zero(dim, dim); },
          [&](const DrivenQubit& d) -> DenseMatrix {
            if (!std::isfinite(d.omega)) throw InvalidArgument("omega must be finite");
            return d.omega * (ad + a);
          },
          [&](const Squeezer& s) -> DenseMatrix {
            if (!std::isfinite(s.zeta)) throw InvalidArgument("zeta must be finite");
            if (dim < 3) throw InvalidArgument("squeezer needs system_dim >= 3");
            return kI * s.zeta * (ad * ad - a * a);
          },
      },
      spec);
}

DenseMatrix system_observable(std::string_view name, int dim) {
  const DenseMatrix a = lowering_matrix(dim);
  if (name == "n") return a.adjoint() * a;
  if (name == "x") return a + a.adjoint();
  if (name == "y") return kI * (DenseMatrix(a.adjoint()) - a);
  throw InvalidArgument("unknown observable '" + std::string(name) + "' (expected n, x or y)");
}

SparseOperator embed_system_operator(const BasisEnumeration& basis, const DenseMatrix& op) {
  const Index d = basis.system_dim();
  if (op.rows() != d || op.cols() != d) throw InvalidArgument("system operator has the wrong shape");
  const Index rest = basis.rest_size();
  std::vector<Triplet> entries;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      if (op(i, j) == Complex{}) continue;
      for (Index r = 0; r < rest; ++r) entries.emplace_back(i * rest + r, j * rest + r, op(i, j));
    }
  SparseOperator out(basis.dimension(), basis.dimension());
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

SparseOperator build_system_h(const BasisEnumeration& basis, const SystemHamiltonianSpec& spec) {
  return embed_system_operator(basis,
                               system_hamiltonian_matrix(static_cast<int>(basis.system_dim()), spec));
}

SparseOperator build_interaction(const BasisEnumeration& basis, const CouplingProfile& profile,
                                 double dt) {
  const ModeLayout& lay = basis.layout();
  if (profile.size() != lay.env_count) throw InvalidArgument("coupling profile length != env_count");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const double scale = 1.0 / std::sqrt(dt);
  const Index L = basis.lo_block();
  std::vector<Triplet> entries;
  for (Index e = 0; e < basis.env_size(); ++e) {
    for (int site : basis.env_sites(e)) {
      const Complex g = profile.gammas[site] * scale;
      if (g == Complex{}) continue;
      const Index lowered = basis.env_without_site(e, site);
      // γ a† B_n : |s, e, l⟩ → √(s+1) |s+1, e∖n, l⟩, plus its adjoint.
      for (int s = 0; s + 1 < lay.system_dim; ++s) {
        const double amp = std::sqrt(static_cast<double>(s + 1));
        for (Index l = 0; l < L; ++l) {
          const Index from = basis.compose(s, e, l);
          const Index to = basis.compose(s + 1, lowered, l);
          entries.emplace_back(to, from, g * amp);
          entries.emplace_back(from, to, std::conj(g) * amp);
        }
      }
    }
  }
  SparseOperator h(basis.dimension(), basis.dimension());
  h.setFromTriplets(entries.begin(), entries.end());
  return h;
}

double SpectralProfile::signed_omega(std::size_t k) const {
  const std::size_t n = omegas.size();
  return (2 * k > n) ? omegas[k] - 2.0 * std::numbers::pi / dt : omegas[k];
}

double SpectralProfile::density(std::size_t k) const {
  return length / (2.0 * std::numbers::pi) * std::norm(kappas[k]);
}

SpectralProfile coupling_spectrum(const CouplingProfile& profile, double dt) {
  const int n_sites = profile.size();
  if (n_sites < 1) throw InvalidArgument("empty coupling profile");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  SpectralProfile out;
  out.dt = dt;
  out.length = n_sites * dt;
  out.omegas.resize(n_sites);
  out.kappas.resize(n_sites);
  const double inv_sqrt_l = 1.0 / std::sqrt(out.length);
  for (int k = 0; k < n_sites; ++k) {
    out.omegas[k] = 2.0 * std::numbers::pi * k / out.length;
    Complex acc{};
    for (int n = 0; n < n_sites; ++n) {
      if (profile.gammas[n] == Complex{}) continue;
      // ω_k n Δt = 2π k n / N, reduced mod N to keep the phase argument small.
      const long long kn = (static_cast<long long>(k) * n) % n_sites;
      acc += profile.gammas[n] * std::exp(kI * (2.0 * std::numbers::pi * kn / n_sites));
    }
    out.kappas[k] = acc * inv_sqrt_l;
  }
  return out;
}

double lorentzian_density(double rate, double memory_rate, double omega) {
  if (!(memory_rate > 0.0)) throw InvalidArgument("memory_rate must be positive");
  const double l2 = memory_rate * memory_rate;
  return rate * l2 / (2.0 * std::numbers::pi * (l2 + omega * omega));
}

}  // namespace colltraj
