#include "colltraj/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "colltraj/config.hpp"
#include "colltraj/errors.hpp"

namespace colltraj {

namespace {

ModeLayout simulation_layout(const TrajectoryConfig& config) {
  ModeLayout layout = config.layout;
  if (std::holds_alternative<Homodyne>(config.scheme) && config.factored_lo) layout.lo_dim = 0;
  return layout;
}

SparseOperator full_hamiltonian(const BasisEnumeration& basis, const TrajectoryConfig& config,
                                const CouplingProfile& profile) {
  SparseOperator h = build_system_h(basis, config.hamiltonian);
  h += build_interaction(basis, profile, config.dt);
  h.prune(Complex{});
  return h;
}

std::vector<Complex> system_amplitudes(const TrajectoryConfig& config) {
  std::vector<Complex> amps = config.initial_state;
  if (amps.empty()) {
    amps.assign(config.layout.system_dim, Complex{});
    amps[1] = 1.0;
  }
  double norm = 0.0;
  for (const auto& a : amps) norm += std::norm(a);
  for (auto& a : amps) a /= std::sqrt(norm);
  return amps;
}

}  // namespace

void TrajectoryConfig::validate() const {
  layout.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive and finite");
  if (n_steps < 1) throw InvalidArgument("n_steps must be >= 1");
  validate_scheme(scheme, layout);
  propagator.validate();
  if (record.stride < 1) throw InvalidArgument("record stride must be >= 1");
  if (record.rho_stride < 0 || (record.rho_stride > 0 && record.rho_stride % record.stride != 0))
    throw InvalidArgument("rho_stride must be 0 or a multiple of the record stride");
  for (const auto& name : record.observables) system_observable(name, layout.system_dim);
  if (!initial_state.empty()) {
    if (static_cast<int>(initial_state.size()) != layout.system_dim)
      throw InvalidArgument("initial_state length must equal system_dim");
    double norm = 0.0;
    for (const auto& a : initial_state) {
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
        throw InvalidArgument("initial_state has a non-finite entry");
      norm += std::norm(a);
    }
    if (!(norm > 0.0)) throw InvalidArgument("initial_state is zero");
  }
}

TrajectorySimulator::TrajectorySimulator(TrajectoryConfig config)
    : config_((config.validate(), std::move(config))),
      fingerprint_(config_fingerprint(config_)),
      homodyne_(std::holds_alternative<Homodyne>(config_.scheme)),
      factored_(homodyne_ && config_.factored_lo),
      basis_(simulation_layout(config_)),
      profile_(build_coupling(config_.coupling, config_.layout.env_count, config_.dt)),
      propagator_(full_hamiltonian(basis_, config_, profile_), config_.dt, config_.propagator) {
  const auto amps = system_amplitudes(config_);
  initial_ = StateVector::Zero(basis_.dimension());
  for (int s = 0; s < config_.layout.system_dim; ++s) initial_[basis_.compose(s, 0, 0)] = amps[s];
  for (const auto& name : config_.record.observables)
    observables_.push_back(system_observable(name, config_.layout.system_dim));
  if (homodyne_) {
    const auto& h = std::get<Homodyne>(config_.scheme);
    eigensystem_ = homodyne_eigensystem(h.lo_dim);
    beta_ = std::polar(h.amplitude * std::sqrt(config_.dt), h.phase);
    lo_amplitudes_ = coherent_amplitudes(beta_, h.lo_dim);
  }
}

MeasurementOutcome TrajectorySimulator::measure(StateVector& state, Rng& rng) const {
  if (!homodyne_) return measure_photo(state, basis_, rng);
  if (factored_) return measure_homodyne_factored(state, basis_, eigensystem_, lo_amplitudes_, rng);
  return measure_homodyne(state, basis_, eigensystem_, rng);
}

Trajectory TrajectorySimulator::run(std::uint64_t trajectory_index) const {
  Trajectory out;
  out.fingerprint = fingerprint_;
  out.index = trajectory_index;
  out.dt = config_.dt;
  out.stride = config_.record.stride;
  out.records.reserve(config_.n_steps / config_.record.stride);

  Rng rng = Rng::for_stream(config_.master_seed, trajectory_index);
  StateVector psi = initial_;
  StateVector scratch;
  double outcome_sum = 0.0;
  double drift = 0.0;
  for (int j = 1; j <= config_.n_steps; ++j) {
    if (homodyne_ && !factored_) prepare_lo(psi, basis_, beta_);
    propagator_.apply(psi);
    drift = std::max(drift, std::abs(psi.squaredNorm() - 1.0));
    outcome_sum += measure(psi, rng).eigenvalue;
    apply_shift(psi, basis_, scratch);
    if (j % config_.record.stride != 0) continue;

    StepRecord rec;
    rec.time = j * config_.dt;
    rec.outcome = outcome_sum;
    rec.norm_drift = drift;
    const DensityMatrix rho = partial_trace_system(basis_, psi);
    rec.observables.reserve(observables_.size());
    for (const auto& op : observables_) rec.observables.push_back((rho * op).trace().real());
    rec.purity = purity(rho);
    if (config_.record.rho_stride > 0 && j % config_.record.rho_stride == 0) rec.rho = rho;
    out.records.push_back(std::move(rec));
    outcome_sum = 0.0;
    drift = 0.0;
  }
  return out;
}

Trajectory run_trajectory(const TrajectoryConfig& config, std::uint64_t trajectory_index) {
  return TrajectorySimulator(config).run(trajectory_index);
}

double integrated_record(const Trajectory& trajectory, double window, double burn_in) {
  if (!(window >= 0.0) || !(burn_in >= 0.0)) throw InvalidArgument("window and burn_in must be >= 0");
  if (trajectory.dt <= 0.0) throw InvalidArgument("trajectory has no time step");
  const double length = trajectory.records.empty() ? 0.0 : trajectory.records.back().time;
  const double slack = 1e-9 * trajectory.dt;
  if (burn_in + window > length + slack)
    throw InvalidArgument("burn_in + window exceeds the trajectory length");
  double total = 0.0;
  for (const auto& rec : trajectory.records)
    if (rec.time > burn_in + slack && rec.time <= burn_in + window + slack) total += rec.outcome;
  return total;
}

Histogram histogram(const std::vector<double>& values, double bin_width, double center) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw InvalidArgument("bin_width must be positive");
  auto bin_of = [&](double v) { return static_cast<long long>(std::floor((v - center) / bin_width + 0.5)); };
  Histogram h;
  long long lo = 0, hi = 0;
  if (!values.empty()) {
    lo = hi = bin_of(values.front());
    for (double v : values) {
      if (!std::isfinite(v)) throw InvalidArgument("histogram value is not finite");
      lo = std::min(lo, bin_of(v));
      hi = std::max(hi, bin_of(v));
    }
  }
  const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
  h.counts.assign(n, 0);
  h.edges.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) h.edges[k] = center + (static_cast<double>(lo + static_cast<long long>(k)) - 0.5) * bin_width;
  for (double v : values) ++h.counts[static_cast<std::size_t>(bin_of(v) - lo)];
  return h;
}

double ObservableSeries::standard_error(std::size_t k, std::uint64_t n) const {
  return n == 0 ? 0.0 : std::sqrt(variance.at(k) / static_cast<double>(n));
}

const ObservableSeries& EnsembleStats::at(const std::string& name) const {
  for (const auto& s : series)
    if (s.name == name) return s;
  throw InvalidArgument("no recorded series named '" + name + "'");
}

EnsembleAccumulator::EnsembleAccumulator(std::vector<std::string> observables,
                                         std::optional<CountingOptions> counting)
    : counting_(counting) {
  observables.push_back("outcome");
  for (auto& name : observables) stats_.series.push_back({std::move(name), {}, {}});
  m2_.resize(stats_.series.size());
}

void EnsembleAccumulator::add(const Trajectory& trajectory) {
  const std::size_t n_obs = stats_.series.size() - 1;
  const auto& recs = trajectory.records;
  if (stats_.n_trajectories == 0) {
    for (const auto& r : recs) {
      stats_.times.push_back(r.time);
      if (r.rho) {
        stats_.rho_times.push_back(r.time);
        rho_sum_.push_back(DenseMatrix::Zero(r.rho->rows(), r.rho->cols()));
      }
    }
    for (std::size_t o = 0; o <= n_obs; ++o) {
      stats_.series[o].mean.assign(recs.size(), 0.0);
      m2_[o].assign(recs.size(), 0.0);
    }
  } else if (recs.size() != stats_.times.size()) {
    throw InvalidArgument("trajectories in one ensemble must share their record layout");
  }
  const double n = static_cast<double>(++stats_.n_trajectories);
  double total = 0.0;
  std::size_t rho_slot = 0;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const auto& r = recs[k];
    if (r.observables.size() != n_obs) throw InvalidArgument("record observable count mismatch");
    for (std::size_t o = 0; o <= n_obs; ++o) {
      const double x = o < n_obs ? r.observables[o] : r.outcome;
      double& mean = stats_.series[o].mean[k];
      const double delta = x - mean;
      mean += delta / n;
      m2_[o][k] += delta * (x - mean);
    }
    total += r.outcome;
    if (r.rho) {
      if (rho_slot >= rho_sum_.size()) throw InvalidArgument("density-matrix record layout mismatch");
      rho_sum_[rho_slot++] += *r.rho;
    }
  }
  stats_.record_totals.push_back(total);
  if (counting_) stats_.integrated.push_back(integrated_record(trajectory, counting_->window, counting_->burn_in));
}

EnsembleStats EnsembleAccumulator::finish() {
  const double n = static_cast<double>(stats_.n_trajectories);
  for (std::size_t o = 0; o < stats_.series.size(); ++o) {
    auto& var = stats_.series[o].variance;
    var.resize(m2_[o].size());
    for (std::size_t k = 0; k < var.size(); ++k) var[k] = n > 1 ? std::max(m2_[o][k], 0.0) / (n - 1.0) : 0.0;
  }
  stats_.mean_rho.clear();
  for (const auto& s : rho_sum_) stats_.mean_rho.push_back(s / n);
  if (counting_) stats_.histogram = histogram(stats_.integrated, counting_->bin_width, counting_->center);
  return std::move(stats_);
}

EnsembleStats run_ensemble(const TrajectoryConfig& config, const EnsembleOptions& options) {
  return run_ensemble(TrajectorySimulator(config), options);
}

EnsembleStats run_ensemble(const TrajectorySimulator& simulator, const EnsembleOptions& options) {
  if (options.counting) {
    const auto& c = *options.counting;
    const auto& cfg = simulator.config();
    if (c.window < 0.0 || c.burn_in < 0.0 || c.burn_in + c.window > cfg.n_steps * cfg.dt * (1.0 + 1e-12))
      throw InvalidArgument("counting window does not fit inside the trajectory");
  }
  return aggregate_trajectories([&](std::uint64_t i) { return simulator.run(i); },
                                simulator.config().record.observables, options);
}

EnsembleStats aggregate_trajectories(const std::function<Trajectory(std::uint64_t)>& run,
                                     std::vector<std::string> observables, const EnsembleOptions& options) {
  if (options.n_trajectories < 1) throw InvalidArgument("n_trajectories must be >= 1");
  if (options.threads < 1) throw InvalidArgument("threads must be >= 1");
  if (options.counting && !(options.counting->bin_width > 0.0))
    throw InvalidArgument("counting bin_width must be positive");
  EnsembleAccumulator acc(std::move(observables), options.counting);
  std::vector<Trajectory> samples;
  const std::uint64_t total = options.n_trajectories;
  const std::size_t workers = static_cast<std::size_t>(std::min<std::uint64_t>(options.threads, total));
  const std::uint64_t batch = 16 * static_cast<std::uint64_t>(workers);

  std::vector<Trajectory> slots;
  std::vector<std::exception_ptr> errors;
  for (std::uint64_t first = 0; first < total; first += batch) {
    const std::uint64_t count = std::min(batch, total - first);
    slots.assign(count, Trajectory{});
    errors.assign(count, nullptr);
    auto work = [&](std::size_t w) {
      for (std::uint64_t k = w; k < count; k += workers) {
        try {
          slots[k] = run(first + k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (std::uint64_t k = 0; k < count; ++k) {
      if (errors[k]) {
        try {
          std::rethrow_exception(errors[k]);
        } catch (const std::exception& e) {
          throw TrajectoryFailure(first + k, e.what());
        }
      }
      acc.add(slots[k]);
      if (samples.size() < options.keep_samples) samples.push_back(std::move(slots[k]));
    }
  }
  EnsembleStats stats = acc.finish();
  stats.samples = std::move(samples);
  return stats;
}

}  // namespace colltraj
