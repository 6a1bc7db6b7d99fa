#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "colltraj/basis.hpp"
#include "colltraj/collision.hpp"
#include "colltraj/model.hpp"
#include "colltraj/propagator.hpp"
#include "colltraj/types.hpp"

namespace colltraj {

struct RecordOptions {
  /// Names accepted by system_observable().
  std::vector<std::string> observables{"n"};
  int stride = 1;
  /// Steps between recorded reduced density matrices; 0 disables them.
  /// Must be a multiple of `stride`.
  int rho_stride = 10;

  friend bool operator==(const RecordOptions&, const RecordOptions&) = default;
};

struct TrajectoryConfig {
  ModeLayout layout;
  CouplingVariant coupling = PointCoupling{};
  SystemHamiltonianSpec hamiltonian = NoSystemHamiltonian{};
  MeasurementScheme scheme = Photodetection{};
  double dt = 0.01;
  int n_steps = 100;
  std::uint64_t master_seed = 0;
  /// Initial system amplitudes (normalized on use). Empty means level 1.
  std::vector<Complex> initial_state;
  RecordOptions record;
  PropagatorConfig propagator{PropagatorMethod::kAuto};
  /// Keep the local oscillator as a separate product factor instead of a
  /// tensor factor of the state. Only affects homodyne runs.
  bool factored_lo = true;

  /// Throws InvalidArgument on any inconsistency.
  void validate() const;
  friend bool operator==(const TrajectoryConfig&, const TrajectoryConfig&) = default;
};

struct StepRecord {
  double time = 0.0;
  /// Sum of measurement eigenvalues since the previous record.
  double outcome = 0.0;
  std::vector<double> observables;
  std::optional<DensityMatrix> rho;
  double purity = 1.0;
  /// Largest |‖ψ‖² − 1| after evolution since the previous record.
  double norm_drift = 0.0;
};

struct Trajectory {
  std::string fingerprint;
  std::uint64_t index = 0;
  double dt = 0.0;
  int stride = 1;
  std::vector<StepRecord> records;
};

/// Owns everything a trajectory needs that does not depend on the random
/// stream: basis, Hamiltonian, propagator, eigensystem. Shareable between
/// threads; `run` is const.
class TrajectorySimulator {
 public:
  explicit TrajectorySimulator(TrajectoryConfig config);

  Trajectory run(std::uint64_t trajectory_index) const;

  const TrajectoryConfig& config() const noexcept { return config_; }
  const BasisEnumeration& basis() const noexcept { return basis_; }
  const CouplingProfile& profile() const noexcept { return profile_; }
  const Propagator& propagator() const noexcept { return propagator_; }
  const StateVector& initial_state() const noexcept { return initial_; }
  const std::string& fingerprint() const noexcept { return fingerprint_; }
  bool lo_factored() const noexcept { return factored_; }

 private:
  MeasurementOutcome measure(StateVector& state, Rng& rng) const;

  TrajectoryConfig config_;
  std::string fingerprint_;
  bool homodyne_ = false;
  bool factored_ = false;
  BasisEnumeration basis_;
  CouplingProfile profile_;
  Propagator propagator_;
  StateVector initial_;
  std::vector<DenseMatrix> observables_;
  HomodyneEigensystem eigensystem_;
  Complex beta_{};
  std::vector<Complex> lo_amplitudes_;
};

Trajectory run_trajectory(const TrajectoryConfig& config, std::uint64_t trajectory_index);

/// Sum of recorded outcomes with time in (burn_in, burn_in + window].
double integrated_record(const Trajectory& trajectory, double window, double burn_in);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
};

/// Uniform bins of width `bin_width` centred on `center + k·bin_width`,
/// half-open [left, right). Empty input yields one empty bin around `center`.
Histogram histogram(const std::vector<double>& values, double bin_width, double center = 0.0);

struct CountingOptions {
  double window = 0.0;
  double burn_in = 0.0;
  double bin_width = 1.0;
  double center = 0.0;
  friend bool operator==(const CountingOptions&, const CountingOptions&) = default;
};

struct EnsembleOptions {
  std::uint64_t n_trajectories = 1;
  int threads = 1;
  std::optional<CountingOptions> counting;
  /// Number of leading trajectories kept verbatim in EnsembleStats::samples.
  std::size_t keep_samples = 0;
};

struct ObservableSeries {
  std::string name;
  std::vector<double> mean;
  std::vector<double> variance;  ///< unbiased sample variance (0 for one trajectory)

  double standard_error(std::size_t k, std::uint64_t n) const;
};

struct EnsembleStats {
  std::uint64_t n_trajectories = 0;
  std::vector<double> times;
  /// Requested observables followed by "outcome", the per-record outcome sum.
  std::vector<ObservableSeries> series;
  std::vector<double> rho_times;
  std::vector<DensityMatrix> mean_rho;
  /// Per-trajectory sum of all outcomes, in trajectory order.
  std::vector<double> record_totals;
  /// Per-trajectory integrated_record values when counting is requested.
  std::vector<double> integrated;
  std::optional<Histogram> histogram;
  std::vector<Trajectory> samples;

  const ObservableSeries& at(const std::string& name) const;
};

/// Streaming Welford aggregation of trajectories, fed in index order.
class EnsembleAccumulator {
 public:
  EnsembleAccumulator(std::vector<std::string> observables, std::optional<CountingOptions> counting = {});
  void add(const Trajectory& trajectory);
  EnsembleStats finish();

 private:
  std::optional<CountingOptions> counting_;
  EnsembleStats stats_;
  std::vector<std::vector<double>> m2_;
  std::vector<DenseMatrix> rho_sum_;
};

/// Runs trajectories 0…n−1 over `threads` workers. Aggregation happens in
/// index order, so the result does not depend on the thread count. Failures
/// are rethrown as TrajectoryFailure carrying the lowest failing index.
EnsembleStats run_ensemble(const TrajectoryConfig& config, const EnsembleOptions& options);
EnsembleStats run_ensemble(const TrajectorySimulator& simulator, const EnsembleOptions& options);

/// The threading and ordered aggregation behind run_ensemble, for any
/// trajectory source that is safe to call concurrently.
EnsembleStats aggregate_trajectories(const std::function<Trajectory(std::uint64_t)>& run,
                                     std::vector<std::string> observables, const EnsembleOptions& options);

}  // namespace colltraj
