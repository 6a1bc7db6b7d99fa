#include "colltraj/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/numeric/odeint.hpp>
#include <gsl/gsl_multimin.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "colltraj/errors.hpp"

namespace colltraj {

namespace {

StateVector initial_system_state(const MarkovianSystem& system) {
  StateVector psi = StateVector::Zero(system.dim);
  if (system.initial_state.empty()) {
    psi[1] = 1.0;
  } else {
    if (static_cast<int>(system.initial_state.size()) != system.dim)
      throw InvalidArgument("initial_state length must equal the system dimension");
    for (int i = 0; i < system.dim; ++i) psi[i] = system.initial_state[i];
  }
  const double norm = psi.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("initial_state is not normalizable");
  return psi / norm;
}

double hamiltonian_scale(const DenseMatrix& h) {
  if (h.size() == 0 || h.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

struct JumpModel {
  DenseMatrix a;
  DenseMatrix number;
  DenseMatrix hamiltonian;
  std::vector<DenseMatrix> observables;
  StateVector initial;
};

JumpModel make_jump_model(const MarkovianSystem& system) {
  if (system.dim < 2) throw InvalidArgument("system dimension must be >= 2");
  JumpModel m;
  m.a = lowering_matrix(system.dim);
  m.number = m.a.adjoint() * m.a;
  m.hamiltonian = system_hamiltonian_matrix(system.dim, system.hamiltonian);
  for (const auto& name : system.observables) m.observables.push_back(system_observable(name, system.dim));
  m.initial = initial_system_state(system);
  return m;
}

void check_step_args(double dt, int n_steps, int stride) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  if (n_steps < 1) throw InvalidArgument("n_steps must be >= 1");
  if (stride < 1) throw InvalidArgument("stride must be >= 1");
}

// Shared record bookkeeping for the two jump unravelings.
class Recorder {
 public:
  Recorder(const JumpModel& model, double dt, int stride, std::uint64_t index) : model_(model), stride_(stride) {
    out_.dt = dt;
    out_.stride = stride;
    out_.index = index;
  }
  void step(int j, const StateVector& psi, double outcome, double drift) {
    sum_ += outcome;
    drift_ = std::max(drift_, drift);
    if (j % stride_ != 0) return;
    StepRecord rec;
    rec.time = j * out_.dt;
    rec.outcome = sum_;
    rec.norm_drift = drift_;
    for (const auto& op : model_.observables) rec.observables.push_back(psi.dot(op * psi).real());
    out_.records.push_back(std::move(rec));
    sum_ = 0.0;
    drift_ = 0.0;
  }
  Trajectory take() { return std::move(out_); }

 private:
  const JumpModel& model_;
  int stride_;
  Trajectory out_;
  double sum_ = 0.0;
  double drift_ = 0.0;
};

}  // namespace

Trajectory mcwf_photodetection(const MarkovianSystem& system, double rate, double dt, int n_steps, Rng& rng,
                               int stride) {
  check_step_args(dt, n_steps, stride);
  if (!(rate >= 0.0)) throw InvalidArgument("rate must be >= 0");
  const JumpModel m = make_jump_model(system);
  if (dt * (rate + hamiltonian_scale(m.hamiltonian)) > 0.1)
    throw InvalidArgument("time step too coarse for the jump unraveling: dt·(γ + |H_S|) > 0.1");
  const DenseMatrix no_jump = DenseMatrix::Identity(system.dim, system.dim) - kI * dt * m.hamiltonian -
                              0.5 * dt * rate * m.number;
  Recorder rec(m, dt, stride, 0);
  StateVector psi = m.initial;
  for (int j = 1; j <= n_steps; ++j) {
    const double p_click = rate * dt * psi.dot(m.number * psi).real();
    double outcome = 0.0;
    if (rng.uniform() < p_click) {
      psi = m.a * psi;
      outcome = 1.0;
    } else {
      psi = no_jump * psi;
    }
    const double norm2 = psi.squaredNorm();
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) throw NumericalError("jump unraveling lost its norm");
    psi /= std::sqrt(norm2);
    rec.step(j, psi, outcome, 0.0);
  }
  return rec.take();
}

Trajectory mcwf_homodyne(const MarkovianSystem& system, double rate, double amplitude, double phase, double dt,
                         int n_steps, Rng& rng, int stride) {
  check_step_args(dt, n_steps, stride);
  if (!(rate >= 0.0)) throw InvalidArgument("rate must be >= 0");
  if (!(amplitude >= 0.0)) throw InvalidArgument("local oscillator amplitude must be >= 0");
  const JumpModel m = make_jump_model(system);
  const Index d = system.dim;
  const DenseMatrix id = DenseMatrix::Identity(d, d);
  const Complex lo = std::polar(amplitude, phase);
  const double r2 = 1.0 / std::sqrt(2.0);
  const DenseMatrix j_plus = r2 * (lo * id - kI * std::sqrt(rate) * m.a);
  const DenseMatrix j_minus = r2 * (lo * id + kI * std::sqrt(rate) * m.a);
  const DenseMatrix no_jump = id - kI * dt * m.hamiltonian - 0.5 * dt * (amplitude * amplitude * id + rate * m.number);
  Recorder rec(m, dt, stride, 0);
  StateVector psi = m.initial;
  StateVector plus, minus;
  for (int j = 1; j <= n_steps; ++j) {
    plus.noalias() = j_plus * psi;
    minus.noalias() = j_minus * psi;
    const double p_plus = plus.squaredNorm() * dt;
    const double p_minus = minus.squaredNorm() * dt;
    if (p_plus + p_minus > 0.5) throw NumericalError("time step too coarse for the homodyne unraveling: P+ + P- > 0.5");
    const double u = rng.uniform();
    double outcome = 0.0;
    if (u < p_plus) {
      psi = plus;
      outcome = 1.0;
    } else if (u < p_plus + p_minus) {
      psi = minus;
      outcome = -1.0;
    } else {
      psi = no_jump * psi;
    }
    const double norm2 = psi.squaredNorm();
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) throw NumericalError("jump unraveling lost its norm");
    psi /= std::sqrt(norm2);
    rec.step(j, psi, outcome, 0.0);
  }
  return rec.take();
}

EnsembleStats run_mcwf_ensemble(const McwfSpec& spec, const EnsembleOptions& options) {
  auto run = [&](std::uint64_t i) {
    Rng rng = Rng::for_stream(spec.master_seed, i);
    Trajectory t = spec.kind == McwfKind::kPhotodetection
                       ? mcwf_photodetection(spec.system, spec.rate, spec.dt, spec.n_steps, rng, spec.stride)
                       : mcwf_homodyne(spec.system, spec.rate, spec.amplitude, spec.phase, spec.dt, spec.n_steps,
                                       rng, spec.stride);
    t.index = i;
    return t;
  };
  return aggregate_trajectories(run, spec.system.observables, options);
}

namespace {

void check_lindblad(const LindbladSpec& spec) {
  const Index d = spec.initial.rows();
  if (d < 1 || spec.initial.cols() != d) throw InvalidArgument("initial density matrix must be square");
  if (spec.hamiltonian.rows() != d || spec.hamiltonian.cols() != d)
    throw InvalidArgument("Hamiltonian dimension differs from the density matrix");
  for (const auto& c : spec.collapse)
    if (c.rows() != d || c.cols() != d) throw InvalidArgument("collapse operator dimension mismatch");
  validate_density_matrix(spec.initial);
  double prev = 0.0;
  for (double t : spec.times) {
    if (!(t >= prev) || !std::isfinite(t)) throw InvalidArgument("output times must be ascending and >= 0");
    prev = t;
  }
  if (!(spec.rel_tol > 0.0)) throw InvalidArgument("rel_tol must be positive");
}

void check_physical(const DensityMatrix& rho, double t) {
  const double trace_err = std::abs(rho.trace() - Complex(1.0));
  if (trace_err > 1e-8)
    throw NumericalError("master equation lost trace (" + std::to_string(trace_err) + ") at t=" + std::to_string(t));
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8)
    throw NumericalError("master equation lost positivity at t=" + std::to_string(t));
}

DenseMatrix effective_hamiltonian(const LindbladSpec& spec, std::vector<DenseMatrix>& jumps) {
  DenseMatrix h = DenseMatrix(spec.hamiltonian);
  for (const auto& c : spec.collapse) {
    jumps.emplace_back(c);
    h -= 0.5 * kI * (jumps.back().adjoint() * jumps.back());
  }
  return h;
}

}  // namespace

std::vector<DensityMatrix> lindblad_solve(const LindbladSpec& spec) {
  namespace ode = boost::numeric::odeint;
  check_lindblad(spec);
  const Index d = spec.initial.rows();
  std::vector<DenseMatrix> jumps;
  const DenseMatrix heff = effective_hamiltonian(spec, jumps);
  const DenseMatrix heff_adj = heff.adjoint();
  using OdeState = std::vector<Complex>;
  OdeState x(spec.initial.data(), spec.initial.data() + d * d);
  auto rhs = [&](const OdeState& in, OdeState& out, double) {
    Eigen::Map<const DenseMatrix> rho(in.data(), d, d);
    Eigen::Map<DenseMatrix> drho(out.data(), d, d);
    drho.noalias() = -kI * (heff * rho);
    drho.noalias() += kI * (rho * heff_adj);
    for (const auto& l : jumps) drho.noalias() += l * rho * l.adjoint();
  };
  auto stepper = ode::make_controlled(spec.rel_tol, spec.rel_tol, ode::runge_kutta_dopri5<OdeState>());
  std::vector<DensityMatrix> out;
  out.reserve(spec.times.size());
  double t = 0.0;
  for (double target : spec.times) {
    if (target > t) {
      ode::integrate_adaptive(stepper, rhs, x, t, target, std::min(0.01, target - t));
      t = target;
    }
    DensityMatrix rho = Eigen::Map<const DenseMatrix>(x.data(), d, d);
    for (const auto& v : x)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericalError("master equation diverged");
    check_physical(rho, t);
    out.push_back(std::move(rho));
  }
  return out;
}

std::vector<DensityMatrix> lindblad_dense_reference(const LindbladSpec& spec) {
  check_lindblad(spec);
  const Index d = spec.initial.rows();
  std::vector<DenseMatrix> jumps;
  const DenseMatrix heff = effective_hamiltonian(spec, jumps);
  const DenseMatrix id = DenseMatrix::Identity(d, d);
  // Column-major vec: vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
  auto kron = [](const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
      for (Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
  };
  DenseMatrix liouvillian = -kI * kron(id, heff) + kI * kron(heff.adjoint().transpose(), id);
  for (const auto& l : jumps) liouvillian += kron(l.conjugate(), l);
  Eigen::Map<const Eigen::VectorXcd> rho0(spec.initial.data(), d * d);
  std::vector<DensityMatrix> out;
  for (double t : spec.times) {
    const Eigen::VectorXcd v = (liouvillian * t).exp() * rho0;
    out.emplace_back(Eigen::Map<const DenseMatrix>(v.data(), d, d));
  }
  return out;
}

LindbladSpec markovian_lindblad(const MarkovianSystem& system, double rate, std::vector<double> times,
                                double ports) {
  if (!(rate >= 0.0) || !(ports > 0.0)) throw InvalidArgument("rate must be >= 0 and ports > 0");
  const JumpModel m = make_jump_model(system);
  LindbladSpec spec;
  spec.hamiltonian = m.hamiltonian.sparseView();
  spec.collapse.push_back(SparseOperator((std::sqrt(ports * rate) * m.a).sparseView()));
  spec.initial = m.initial * m.initial.adjoint();
  spec.times = std::move(times);
  return spec;
}

LindbladSpec jc_pseudomode(double rate, double memory_rate, double omega, int cavity_dim,
                           std::vector<double> times) {
  if (!(rate > 0.0) || !(memory_rate > 0.0)) throw InvalidArgument("rate and memory_rate must be positive");
  if (cavity_dim < 2) throw InvalidArgument("cavity truncation must keep at least two levels");
  if (!std::isfinite(omega)) throw InvalidArgument("omega must be finite");
  const double kappa = 2.0 * memory_rate;
  const double g = std::sqrt(0.5 * rate * memory_rate);
  const Index d = 2 * cavity_dim;
  DenseMatrix sigma_minus = lowering_matrix(2);
  DenseMatrix c = lowering_matrix(cavity_dim);
  auto kron = [&](const DenseMatrix& q, const DenseMatrix& f) {
    DenseMatrix k = DenseMatrix::Zero(d, d);
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j) k.block(i * cavity_dim, j * cavity_dim, cavity_dim, cavity_dim) = q(i, j) * f;
    return k;
  };
  const DenseMatrix id_q = DenseMatrix::Identity(2, 2);
  const DenseMatrix id_c = DenseMatrix::Identity(cavity_dim, cavity_dim);
  const DenseMatrix sigma_plus = sigma_minus.adjoint();
  const DenseMatrix h = omega * kron(sigma_plus + sigma_minus, id_c) +
                        g * (kron(sigma_plus, c) + kron(sigma_minus, c.adjoint()));
  LindbladSpec spec;
  spec.hamiltonian = h.sparseView();
  spec.collapse.push_back(SparseOperator((std::sqrt(kappa) * kron(id_q, c)).sparseView()));
  spec.initial = DensityMatrix::Zero(d, d);
  spec.initial(cavity_dim, cavity_dim) = 1.0;
  spec.times = std::move(times);
  return spec;
}

DensityMatrix trace_out_cavity(const DensityMatrix& rho, int cavity_dim) {
  if (cavity_dim < 1 || rho.rows() != 2 * cavity_dim || rho.cols() != rho.rows())
    throw InvalidArgument("density matrix is not qubit ⊗ cavity");
  DensityMatrix q = DensityMatrix::Zero(2, 2);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) q(i, j) = rho.block(i * cavity_dim, j * cavity_dim, cavity_dim, cavity_dim).trace();
  return q;
}

AmplitudeSeries single_excitation_schrodinger(const CouplingProfile& profile, double dt, double horizon) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon must be finite and >= 0");
  if (profile.size() < 1) throw InvalidArgument("coupling profile is empty");
  if (profile.dt > 0.0 && std::abs(profile.dt - dt) > 1e-12 * dt)
    throw InvalidArgument("coupling profile was built for a different dt");
  const long steps = std::lround(horizon / dt);
  // Emitted light leaves site 0 and would re-enter at the far end of a
  // periodic chain; padding pushes that past the horizon.
  const Index sites = profile.size() + steps + 1;
  const Index dim = sites + 1;
  const double two_pi = 2.0 * std::numbers::pi;
  DenseMatrix h = DenseMatrix::Zero(dim, dim);
  const double norm = 1.0 / std::sqrt(dt * static_cast<double>(sites));
  for (Index k = 0; k < sites; ++k) {
    double omega = two_pi * static_cast<double>(k) / (static_cast<double>(sites) * dt);
    if (omega > std::numbers::pi / dt) omega -= two_pi / dt;
    h(k + 1, k + 1) = omega;
    Complex v{};
    for (int n = 0; n < profile.size(); ++n) {
      if (profile.gammas[n] == Complex{}) continue;
      const double arg = -two_pi * static_cast<double>((k * n) % sites) / static_cast<double>(sites);
      v += profile.gammas[n] * std::polar(1.0, arg);
    }
    h(0, k + 1) = v * norm;
    h(k + 1, 0) = std::conj(v) * norm;
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(h);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd weight = eig.eigenvectors().row(0).cwiseAbs2().transpose();
  const Eigen::VectorXd& energy = eig.eigenvalues();
  AmplitudeSeries out;
  out.times.reserve(steps + 1);
  out.amplitude.reserve(steps + 1);
  for (long j = 0; j <= steps; ++j) {
    const double t = j * dt;
    Complex c{};
    for (Index m = 0; m < dim; ++m) c += weight[m] * std::polar(1.0, -energy[m] * t);
    out.times.push_back(t);
    out.amplitude.push_back(c);
  }
  return out;
}

void DDESpec::validate() const {
  if (!std::isfinite(gamma0) || !std::isfinite(gamma_fb) || !std::isfinite(phase))
    throw InvalidArgument("DDE coefficients must be finite");
  if (!(delay >= 0.0)) throw InvalidArgument("delay must be >= 0");
  if (!(horizon >= 0.0)) throw InvalidArgument("horizon must be >= 0");
  if (!(step > 0.0)) throw InvalidArgument("step must be positive");
  if (delay > 0.0) {
    if (step > delay / 10.0 * (1.0 + 1e-12)) throw InvalidArgument("step must not exceed delay/10");
    const double ratio = delay / step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
      throw InvalidArgument("delay must be an integer multiple of step");
  }
}

AmplitudeSeries feedback_dde(const DDESpec& spec) {
  spec.validate();
  const long n = std::lround(spec.horizon / spec.step);
  const long lag = spec.delay > 0.0 ? std::lround(spec.delay / spec.step) : 0;
  const double h = spec.step;
  const Complex fb = spec.gamma_fb * std::polar(1.0, spec.phase);
  std::vector<Complex> c(n + 1), f(n + 1);
  auto rhs = [&](double, Complex value, Complex delayed) { return -spec.gamma0 * value - fb * delayed; };
  // Delayed value at t_i + s·h for s ∈ {0, ½, 1}; for lag 0 the caller
  // passes the current stage value instead. A step starting at or after the
  // delay sees the right-hand limit c(0) = 1, one ending at it sees zero.
  auto history = [&](long i, double s) -> Complex {
    if (i < 0) return 0.0;
    if (s == 0.0) return c[i];
    if (s == 1.0) return c[i + 1];
    return 0.5 * (c[i] + c[i + 1]) + h * (f[i] - f[i + 1]) / 8.0;
  };
  c[0] = 1.0;
  f[0] = rhs(0.0, c[0], lag == 0 ? c[0] : history(-lag, 0.0));
  for (long i = 0; i < n; ++i) {
    const double t = i * h;
    Complex k1, k2, k3, k4;
    if (lag == 0) {
      k1 = rhs(t, c[i], c[i]);
      Complex y = c[i] + 0.5 * h * k1;
      k2 = rhs(t + 0.5 * h, y, y);
      y = c[i] + 0.5 * h * k2;
      k3 = rhs(t + 0.5 * h, y, y);
      y = c[i] + h * k3;
      k4 = rhs(t + h, y, y);
    } else {
      const long j = i - lag;
      k1 = rhs(t, c[i], history(j, 0.0));
      k2 = rhs(t + 0.5 * h, c[i] + 0.5 * h * k1, history(j, 0.5));
      k3 = rhs(t + 0.5 * h, c[i] + 0.5 * h * k2, history(j, 0.5));
      k4 = rhs(t + h, c[i] + h * k3, history(j, 1.0));
    }
    c[i + 1] = c[i] + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const long jj = i + 1 - lag;
    f[i + 1] = rhs(t + h, c[i + 1], lag == 0 ? c[i + 1] : (jj >= 0 ? c[jj] : Complex{}));
    if (!std::isfinite(c[i + 1].real()) || !std::isfinite(c[i + 1].imag())) throw NumericalError("DDE diverged");
  }
  AmplitudeSeries out;
  out.times.reserve(n + 1);
  for (long i = 0; i <= n; ++i) out.times.push_back(i * h);
  out.amplitude = std::move(c);
  return out;
}

namespace {

struct FitContext {
  DDESpec base;
  const AmplitudeSeries* reference;
  long substeps;
};

double sample_error(const AmplitudeSeries& fitted, const AmplitudeSeries& reference, long substeps, bool squared) {
  double acc = 0.0;
  for (std::size_t k = 0; k < reference.amplitude.size(); ++k) {
    const double e = std::abs(fitted.amplitude[k * substeps] - reference.amplitude[k]);
    acc = squared ? acc + e * e : std::max(acc, e);
  }
  return acc;
}

double fit_objective(const gsl_vector* x, void* params) {
  auto* ctx = static_cast<FitContext*>(params);
  DDESpec spec = ctx->base;
  spec.gamma0 = gsl_vector_get(x, 0);
  spec.gamma_fb = gsl_vector_get(x, 1);
  try {
    return sample_error(feedback_dde(spec), *ctx->reference, ctx->substeps, true);
  } catch (const NumericalError&) {
    return GSL_POSINF;
  }
}

}  // namespace

DDECalibration calibrate_feedback_dde(double rate, double phase, int delay_steps, double dt, double horizon,
                                      double tolerance) {
  if (!(rate > 0.0)) throw InvalidArgument("rate must be positive");
  if (delay_steps < 1) throw InvalidArgument("delay_steps must be >= 1");
  const CouplingProfile profile = build_coupling(TwoPointFeedback{rate, phase, delay_steps}, delay_steps + 1, dt);
  DDECalibration cal;
  cal.reference = single_excitation_schrodinger(profile, dt, horizon);

  const long substeps = std::max<long>(4, static_cast<long>(std::ceil(10.0 / delay_steps)));
  FitContext ctx{DDESpec{rate, rate, phase, delay_steps * dt, horizon, dt / static_cast<double>(substeps)},
                 &cal.reference, substeps};
  // Keep the horizon on the reference grid.
  ctx.base.horizon = static_cast<double>(cal.reference.times.size() - 1) * dt;

  gsl_multimin_function fn{&fit_objective, 2, &ctx};
  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  gsl_vector_set(x, 0, rate);
  gsl_vector_set(x, 1, rate);
  gsl_vector_set_all(step, 0.1 * rate);
  gsl_multimin_fminimizer* solver = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_multimin_fminimizer_set(solver, &fn, x, step);
  int status = GSL_CONTINUE;
  for (int iter = 0; iter < 500 && status == GSL_CONTINUE; ++iter) {
    if (gsl_multimin_fminimizer_iterate(solver) != 0) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver), 1e-10 * rate);
  }
  cal.spec = ctx.base;
  cal.spec.gamma0 = gsl_vector_get(solver->x, 0);
  cal.spec.gamma_fb = gsl_vector_get(solver->x, 1);
  gsl_multimin_fminimizer_free(solver);
  gsl_vector_free(step);
  gsl_vector_free(x);

  const AmplitudeSeries full = feedback_dde(cal.spec);
  cal.fitted.times = cal.reference.times;
  for (std::size_t k = 0; k < cal.reference.times.size(); ++k)
    cal.fitted.amplitude.push_back(full.amplitude[k * substeps]);
  cal.max_error = sample_error(full, cal.reference, substeps, false);
  if (!(cal.max_error <= tolerance))
    throw CalibrationError("DDE calibration misses the full-mode oracle by " + std::to_string(cal.max_error) +
                           " (tolerance " + std::to_string(tolerance) + ")");
  return cal;
}

}  // namespace colltraj
