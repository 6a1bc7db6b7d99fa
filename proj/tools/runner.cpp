#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "colltraj/errors.hpp"
#include "colltraj/oracles.hpp"

namespace colltraj::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string() + " for checksumming");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

namespace {

// Collects the files a run creates so a failure can remove them again.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot create " + p.string());
    files_.push_back(p);
    return out;
  }
  void remove_all() noexcept {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
  }
  const std::vector<fs::path>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

void write_line(std::ofstream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

void write_trajectories(std::ofstream& out, const std::vector<Trajectory>& trajectories,
                        const std::vector<std::string>& names) {
  for (const auto& t : trajectories)
    for (const auto& r : t.records) {
      out << "{\"trajectory\":" << t.index << ",\"time\":" << format_double(r.time)
          << ",\"outcome\":" << format_double(r.outcome) << ",\"observables\":{";
      for (std::size_t k = 0; k < names.size(); ++k) {
        if (k) out << ',';
        out << '"' << names[k] << "\":" << format_double(r.observables[k]);
      }
      out << "},\"purity\":" << format_double(r.purity) << ",\"norm_drift\":" << format_double(r.norm_drift)
          << "}\n";
    }
}

void write_ensemble_csv(std::ofstream& out, const EnsembleStats& stats) {
  std::vector<std::string> header{"time"};
  for (const auto& s : stats.series) {
    header.push_back(s.name + "_mean");
    header.push_back(s.name + "_variance");
    header.push_back(s.name + "_stderr");
  }
  write_line(out, header);
  for (std::size_t k = 0; k < stats.times.size(); ++k) {
    std::vector<std::string> row{format_double(stats.times[k])};
    for (const auto& s : stats.series) {
      row.push_back(format_double(s.mean[k]));
      row.push_back(format_double(s.variance[k]));
      row.push_back(format_double(s.standard_error(k, stats.n_trajectories)));
    }
    write_line(out, row);
  }
}

void write_histogram_csv(std::ofstream& out, const Histogram& h) {
  write_line(out, {"bin_left", "bin_right", "count"});
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    write_line(out, {format_double(h.edges[k]), format_double(h.edges[k + 1]), std::to_string(h.counts[k])});
}

void write_rho_csv(std::ofstream& out, const EnsembleStats& stats) {
  write_line(out, {"time", "row", "col", "re", "im"});
  for (std::size_t k = 0; k < stats.rho_times.size(); ++k) {
    const auto& rho = stats.mean_rho[k];
    for (Index i = 0; i < rho.rows(); ++i)
      for (Index j = 0; j < rho.cols(); ++j)
        write_line(out, {format_double(stats.rho_times[k]), std::to_string(i), std::to_string(j),
                         format_double(rho(i, j).real()), format_double(rho(i, j).imag())});
  }
}

// A reference curve on the collision record grid: mean and standard error
// per observable (standard error 0 for deterministic oracles).
struct ReferenceSeries {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> stderr_;
  std::optional<EnsembleStats> ensemble;
};

std::vector<double> record_times(const TrajectoryConfig& t, bool include_zero) {
  std::vector<double> times;
  if (include_zero) times.push_back(0.0);
  for (int j = t.record.stride; j <= t.n_steps; j += t.record.stride) times.push_back(j * t.dt);
  return times;
}

MarkovianSystem markovian_system(const TrajectoryConfig& t) {
  MarkovianSystem s;
  s.dim = t.layout.system_dim;
  s.hamiltonian = t.hamiltonian;
  s.initial_state = t.initial_state;
  s.observables = t.record.observables;
  return s;
}

double coupling_rate(const CouplingVariant& v) {
  if (const auto* p = std::get_if<PointCoupling>(&v)) return p->rate;
  if (const auto* f = std::get_if<TwoPointFeedback>(&v)) return f->rate;
  if (const auto* x = std::get_if<ExponentialCoupling>(&v)) return x->rate;
  throw ConfigError("environment.coupling", "this oracle needs a coupling with a rate");
}

ReferenceSeries from_density_matrices(const std::vector<double>& times, const std::vector<DensityMatrix>& rhos,
                                      const TrajectoryConfig& t) {
  ReferenceSeries ref;
  ref.times = times;
  ref.names = t.record.observables;
  for (const auto& name : ref.names) {
    const DenseMatrix op = system_observable(name, static_cast<int>(rhos.front().rows()));
    std::vector<double> values;
    for (const auto& rho : rhos) values.push_back((rho * op).trace().real());
    ref.mean.push_back(std::move(values));
    ref.stderr_.emplace_back(times.size(), 0.0);
  }
  return ref;
}

ReferenceSeries reference_series(const RunConfig& rc, bool include_zero, int threads) {
  const TrajectoryConfig& t = rc.trajectory;
  const OracleOptions& o = *rc.oracle;
  const std::vector<double> times = record_times(t, include_zero);
  switch (o.kind) {
    case OracleKind::kLindblad: {
      const auto rhos = lindblad_solve(markovian_lindblad(markovian_system(t), coupling_rate(t.coupling), times, o.ports));
      return from_density_matrices(times, rhos, t);
    }
    case OracleKind::kJcPseudomode: {
      const auto& x = std::get<ExponentialCoupling>(t.coupling);
      const double omega = std::holds_alternative<DrivenQubit>(t.hamiltonian) ? std::get<DrivenQubit>(t.hamiltonian).omega : 0.0;
      const auto full = lindblad_solve(jc_pseudomode(x.rate, x.memory_rate, omega, o.cavity_dim, times));
      std::vector<DensityMatrix> qubit;
      for (const auto& rho : full) qubit.push_back(trace_out_cavity(rho, o.cavity_dim));
      return from_density_matrices(times, qubit, t);
    }
    case OracleKind::kSingleExcitation: {
      const CouplingProfile profile = build_coupling(t.coupling, t.layout.env_count, t.dt);
      const AmplitudeSeries amp = single_excitation_schrodinger(profile, t.dt, t.n_steps * t.dt);
      ReferenceSeries ref;
      ref.times = times;
      for (const auto& name : t.record.observables) {
        if (name != "n") continue;  // only the population is available in this sector
        std::vector<double> values;
        for (double time : times) values.push_back(std::norm(amp.amplitude[std::lround(time / t.dt)]));
        ref.names.push_back(name);
        ref.mean.push_back(std::move(values));
        ref.stderr_.emplace_back(times.size(), 0.0);
      }
      return ref;
    }
    case OracleKind::kMcwf: {
      McwfSpec spec;
      spec.system = markovian_system(t);
      spec.rate = coupling_rate(t.coupling);
      const double dt = o.mcwf_dt > 0.0 ? o.mcwf_dt : t.dt;
      const int ratio = static_cast<int>(std::lround(t.dt / dt));
      spec.dt = t.dt / ratio;
      spec.n_steps = t.n_steps * ratio;
      spec.stride = t.record.stride * ratio;
      spec.master_seed = splitmix64(t.master_seed ^ 0x6f7261636c65ULL);
      if (const auto* h = std::get_if<Homodyne>(&t.scheme)) {
        spec.kind = McwfKind::kHomodyne;
        spec.amplitude = h->amplitude;
        spec.phase = h->phase;
      }
      EnsembleOptions eo;
      eo.n_trajectories = rc.n_trajectories;
      eo.threads = threads;
      eo.counting = rc.counting;
      ReferenceSeries ref;
      ref.ensemble = run_mcwf_ensemble(spec, eo);
      ref.times = ref.ensemble->times;
      for (const auto& s : ref.ensemble->series) {
        ref.names.push_back(s.name);
        ref.mean.push_back(s.mean);
        std::vector<double> se;
        for (std::size_t k = 0; k < s.mean.size(); ++k) se.push_back(s.standard_error(k, ref.ensemble->n_trajectories));
        ref.stderr_.push_back(std::move(se));
      }
      return ref;
    }
    case OracleKind::kFeedbackDde:
      break;
  }
  throw ConfigError("oracle.kind", "no reference series for " + to_string(o.kind));
}

void write_reference_csv(std::ofstream& out, const ReferenceSeries& ref) {
  std::vector<std::string> header{"time"};
  for (const auto& n : ref.names) {
    header.push_back(n + "_mean");
    header.push_back(n + "_stderr");
  }
  write_line(out, header);
  for (std::size_t k = 0; k < ref.times.size(); ++k) {
    std::vector<std::string> row{format_double(ref.times[k])};
    for (std::size_t o = 0; o < ref.names.size(); ++o) {
      row.push_back(format_double(ref.mean[o][k]));
      row.push_back(format_double(ref.stderr_[o][k]));
    }
    write_line(out, row);
  }
}

json run_oracle(const RunConfig& rc, OutputSet& outputs) {
  const TrajectoryConfig& t = rc.trajectory;
  if (rc.oracle->kind == OracleKind::kFeedbackDde) {
    const auto& f = std::get<TwoPointFeedback>(t.coupling);
    const DDECalibration cal =
        calibrate_feedback_dde(f.rate, f.phase, f.delay_steps, t.dt, t.n_steps * t.dt, rc.oracle->dde_tolerance);
    auto out = outputs.open("oracle.csv");
    write_line(out, {"time", "dde_re", "dde_im", "dde_population", "reference_re", "reference_im",
                     "reference_population"});
    for (std::size_t k = 0; k < cal.reference.times.size(); ++k) {
      const Complex a = cal.fitted.amplitude[k];
      const Complex b = cal.reference.amplitude[k];
      write_line(out, {format_double(cal.reference.times[k]), format_double(a.real()), format_double(a.imag()),
                       format_double(std::norm(a)), format_double(b.real()), format_double(b.imag()),
                       format_double(std::norm(b))});
    }
    return json{{"gamma0", cal.spec.gamma0}, {"gamma_fb", cal.spec.gamma_fb}, {"max_error", cal.max_error}};
  }
  const ReferenceSeries ref = reference_series(rc, true, rc.threads);
  auto out = outputs.open("oracle.csv");
  if (ref.ensemble) {
    write_ensemble_csv(out, *ref.ensemble);
    if (ref.ensemble->histogram) {
      auto h = outputs.open("histogram.csv");
      write_histogram_csv(h, *ref.ensemble->histogram);
    }
  } else {
    write_reference_csv(out, ref);
  }
  return json::object();
}

EnsembleStats run_collision_ensemble(const RunConfig& rc) {
  EnsembleOptions eo;
  eo.n_trajectories = rc.n_trajectories;
  eo.threads = rc.threads;
  eo.counting = rc.counting;
  eo.keep_samples = static_cast<std::size_t>(std::min<std::uint64_t>(rc.keep_trajectories, rc.n_trajectories));
  return run_ensemble(rc.trajectory, eo);
}

void write_ensemble_outputs(const RunConfig& rc, const EnsembleStats& stats, OutputSet& outputs) {
  {
    auto out = outputs.open("trajectories.ndjson");
    write_trajectories(out, stats.samples, rc.trajectory.record.observables);
  }
  {
    auto out = outputs.open("ensemble.csv");
    write_ensemble_csv(out, stats);
  }
  if (!stats.rho_times.empty()) {
    auto out = outputs.open("rho.csv");
    write_rho_csv(out, stats);
  }
  if (stats.histogram) {
    auto out = outputs.open("histogram.csv");
    write_histogram_csv(out, *stats.histogram);
  }
}

json summarize(const EnsembleStats& stats) {
  std::uint64_t silent = 0;
  for (double total : stats.record_totals)
    if (total == 0.0) ++silent;
  return json{{"n_trajectories", stats.n_trajectories}, {"zero_outcome_trajectories", silent}};
}

json run_compare(const RunConfig& rc, OutputSet& outputs) {
  const EnsembleStats stats = run_collision_ensemble(rc);
  write_ensemble_outputs(rc, stats, outputs);
  const ReferenceSeries ref = reference_series(rc, false, rc.threads);
  if (ref.ensemble && ref.ensemble->histogram) {
    auto out = outputs.open("histogram_oracle.csv");
    write_histogram_csv(out, *ref.ensemble->histogram);
  }
  if (ref.times.size() != stats.times.size()) throw NumericalError("oracle and collision grids differ");
  std::vector<std::string> header{"time"};
  std::vector<std::pair<const ObservableSeries*, std::size_t>> pairs;
  for (std::size_t o = 0; o < ref.names.size(); ++o) {
    const ObservableSeries& s = stats.at(ref.names[o]);
    pairs.emplace_back(&s, o);
    for (const char* suffix : {"_collision_mean", "_collision_stderr", "_oracle_mean", "_oracle_stderr", "_z"})
      header.push_back(ref.names[o] + suffix);
  }
  double max_abs_z = 0.0;
  double max_abs_diff = 0.0;
  auto out = outputs.open("compare.csv");
  write_line(out, header);
  for (std::size_t k = 0; k < stats.times.size(); ++k) {
    std::vector<std::string> row{format_double(stats.times[k])};
    for (const auto& [series, o] : pairs) {
      const double cm = series->mean[k];
      const double cs = series->standard_error(k, stats.n_trajectories);
      const double om = ref.mean[o][k];
      const double os = ref.stderr_[o][k];
      const double diff = cm - om;
      const double sigma = std::hypot(cs, os);
      // No spread on either side (e.g. before the first jump): z is undefined.
      const double z = sigma > 0.0 ? diff / sigma : std::numeric_limits<double>::quiet_NaN();
      if (sigma > 0.0) max_abs_z = std::max(max_abs_z, std::abs(z));
      max_abs_diff = std::max(max_abs_diff, std::abs(diff));
      for (double v : {cm, cs, om, os, z}) row.push_back(format_double(v));
    }
    write_line(out, row);
  }
  json summary = summarize(stats);
  summary["max_abs_z"] = max_abs_z;
  summary["max_abs_diff"] = max_abs_diff;
  return summary;
}

json run_spectrum(const RunConfig& rc, OutputSet& outputs) {
  const TrajectoryConfig& t = rc.trajectory;
  const CouplingProfile profile = build_coupling(t.coupling, t.layout.env_count, t.dt);
  const SpectralProfile sp = coupling_spectrum(profile, t.dt);
  const auto* x = std::get_if<ExponentialCoupling>(&t.coupling);
  auto out = outputs.open("spectrum.csv");
  std::vector<std::string> header{"k", "omega", "signed_omega", "kappa_re", "kappa_im", "kappa_abs2", "density"};
  if (x) header.push_back("lorentzian");
  write_line(out, header);
  for (std::size_t k = 0; k < sp.omegas.size(); ++k) {
    std::vector<std::string> row{std::to_string(k),
                                 format_double(sp.omegas[k]),
                                 format_double(sp.signed_omega(k)),
                                 format_double(sp.kappas[k].real()),
                                 format_double(sp.kappas[k].imag()),
                                 format_double(std::norm(sp.kappas[k])),
                                 format_double(sp.density(k))};
    if (x) row.push_back(format_double(lorentzian_density(x->rate, x->memory_rate, sp.signed_omega(k))));
    write_line(out, row);
  }
  return json{{"length", sp.length}};
}

void write_manifest(const fs::path& path, const json& manifest) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << manifest.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

}  // namespace

RunReport execute(const RunRequest& request) {
  const RunConfig& rc = request.config;
  const fs::path dir = rc.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());

  const fs::path manifest_path = dir / "manifest.json";
  const auto started = std::chrono::steady_clock::now();
  json manifest;
  manifest["status"] = "running";
  manifest["version"] = library_version();
  manifest["master_seed"] = rc.trajectory.master_seed;
  manifest["config"] = to_json(rc);
  manifest["fingerprint"] = config_fingerprint(rc.trajectory);
  if (rc.mode == RunMode::kTrajectory) manifest["trajectory_index"] = request.trajectory_index;
  write_manifest(manifest_path, manifest);

  OutputSet outputs(dir);
  RunReport report;
  try {
    switch (rc.mode) {
      case RunMode::kTrajectory: {
        const Trajectory t = run_trajectory(rc.trajectory, request.trajectory_index);
        auto out = outputs.open("trajectories.ndjson");
        write_trajectories(out, {t}, rc.trajectory.record.observables);
        break;
      }
      case RunMode::kEnsemble: {
        const EnsembleStats stats = run_collision_ensemble(rc);
        write_ensemble_outputs(rc, stats, outputs);
        report.extra = summarize(stats);
        break;
      }
      case RunMode::kOracle: report.extra = run_oracle(rc, outputs); break;
      case RunMode::kCompare: report.extra = run_compare(rc, outputs); break;
      case RunMode::kSpectrum: report.extra = run_spectrum(rc, outputs); break;
    }
    json checksums = json::object();
    for (const auto& f : outputs.files()) checksums[f.filename().string()] = sha256_file(f);
    manifest["status"] = "complete";
    manifest["outputs"] = checksums;
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!report.extra.is_null()) manifest["summary"] = report.extra;
    write_manifest(manifest_path, manifest);
  } catch (...) {
    outputs.remove_all();
    fs::remove(manifest_path, ec);
    throw;
  }
  report.outputs = outputs.files();
  report.outputs.push_back(manifest_path);
  return report;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Collision-model quantum trajectory simulator"};
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::uint64_t> trajectories;
  std::optional<std::string> out_dir;
  std::optional<std::string> mode;
  std::uint64_t index = 0;
  bool print_config = false;
  app.add_option("config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "Master seed (overrides seed)");
  app.add_option("--threads", threads, "Worker threads (overrides ensemble.threads)");
  app.add_option("--trajectories", trajectories, "Trajectory count (overrides ensemble.trajectories)");
  app.add_option("--out-dir", out_dir, "Output directory (overrides out_dir)");
  app.add_option("--mode", mode, "Run mode (overrides mode)");
  app.add_option("--index", index, "Trajectory index for mode=trajectory");
  app.add_option("--set", overrides, "Override any key: dotted.key=value (repeatable)");
  app.add_flag("--print-config", print_config, "Print the effective configuration and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  RunRequest request;
  request.trajectory_index = index;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("", "cannot read config file " + config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    json doc;
    try {
      doc = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
      throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    for (const auto& o : overrides) apply_override(doc, o);
    if (seed) doc["seed"] = *seed;
    if (threads) apply_override(doc, "ensemble.threads=" + std::to_string(*threads));
    if (trajectories) apply_override(doc, "ensemble.trajectories=" + std::to_string(*trajectories));
    if (out_dir) doc["out_dir"] = *out_dir;
    if (mode) doc["mode"] = *mode;
    request.config = parse_config(doc);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  }
  if (print_config) {
    std::cout << to_json(request.config).dump(2) << '\n';
    return kOk;
  }
  try {
    const RunReport report = execute(request);
    for (const auto& f : report.outputs) std::cout << f.string() << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace colltraj::cli
