#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "colltraj/basis.hpp"
#include "colltraj/collision.hpp"
#include "colltraj/config.hpp"
#include "colltraj/engine.hpp"
#include "colltraj/errors.hpp"
#include "colltraj/model.hpp"
#include "colltraj/oracles.hpp"

namespace py = pybind11;
using namespace colltraj;

namespace {

template <typename T>
py::array_t<T> to_array(const std::vector<T>& values) {
  return py::array_t<T>(static_cast<py::ssize_t>(values.size()), values.data());
}

py::dict trajectory_dict(const Trajectory& traj, const std::vector<std::string>& names) {
  const std::size_t n = traj.records.size();
  std::vector<double> time(n), outcome(n), purity(n), drift(n);
  std::vector<std::vector<double>> obs(names.size(), std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const StepRecord& r = traj.records[k];
    time[k] = r.time;
    outcome[k] = r.outcome;
    purity[k] = r.purity;
    drift[k] = r.norm_drift;
    for (std::size_t o = 0; o < names.size(); ++o) obs[o][k] = r.observables[o];
  }
  py::dict observables;
  for (std::size_t o = 0; o < names.size(); ++o) observables[py::str(names[o])] = to_array(obs[o]);
  py::dict out;
  out["index"] = traj.index;
  out["fingerprint"] = traj.fingerprint;
  out["time"] = to_array(time);
  out["outcome"] = to_array(outcome);
  out["observables"] = observables;
  out["purity"] = to_array(purity);
  out["norm_drift"] = to_array(drift);
  return out;
}

py::dict ensemble_dict(const EnsembleStats& stats) {
  py::dict series;
  for (const ObservableSeries& s : stats.series) {
    std::vector<double> se(s.mean.size());
    for (std::size_t k = 0; k < se.size(); ++k) se[k] = s.standard_error(k, stats.n_trajectories);
    py::dict entry;
    entry["mean"] = to_array(s.mean);
    entry["variance"] = to_array(s.variance);
    entry["stderr"] = to_array(se);
    series[py::str(s.name)] = entry;
  }
  py::dict out;
  out["n_trajectories"] = stats.n_trajectories;
  out["time"] = to_array(stats.times);
  out["series"] = series;
  out["rho_time"] = to_array(stats.rho_times);
  out["rho"] = stats.mean_rho;
  out["record_totals"] = to_array(stats.record_totals);
  out["integrated"] = to_array(stats.integrated);
  if (stats.histogram) {
    py::dict h;
    h["edges"] = to_array(stats.histogram->edges);
    h["counts"] = to_array(stats.histogram->counts);
    out["histogram"] = h;
  } else {
    out["histogram"] = py::none();
  }
  return out;
}

RunConfig load(const std::string& text) { return parse_config_text(text); }

py::dict amplitude_dict(const AmplitudeSeries& s) {
  std::vector<double> population(s.amplitude.size());
  for (std::size_t k = 0; k < population.size(); ++k) population[k] = std::norm(s.amplitude[k]);
  py::dict out;
  out["time"] = to_array(s.times);
  out["amplitude"] = to_array(s.amplitude);
  out["population"] = to_array(population);
  return out;
}

SystemHamiltonianSpec hamiltonian_from(double omega, double zeta) {
  if (omega != 0.0 && zeta != 0.0) throw InvalidArgument("give either omega or zeta, not both");
  if (omega != 0.0) return DrivenQubit{omega};
  if (zeta != 0.0) return Squeezer{zeta};
  return NoSystemHamiltonian{};
}

}  // namespace

PYBIND11_MODULE(_colltraj, m) {
  m.doc() = "Collision-model quantum trajectories (native core)";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<CalibrationError>(m, "CalibrationError", numerical.ptr());

  m.attr("__version__") = library_version();

  m.def(
      "canonical_config", [](const std::string& text) { return to_json(load(text)).dump(); },
      py::arg("text"), "Validate a JSON configuration and return its canonical form.");
  m.def(
      "config_fingerprint", [](const std::string& text) { return config_fingerprint(load(text).trajectory); },
      py::arg("text"));

  m.def(
      "basis_dimension",
      [](int system_dim, int env_count, int env_cap, int lo_dim) {
        return basis_dimension(ModeLayout{system_dim, env_count, env_cap, lo_dim});
      },
      py::arg("system_dim"), py::arg("env_count"), py::arg("env_cap"), py::arg("lo_dim") = 0);

  py::class_<BasisEnumeration>(m, "Basis")
      .def(py::init([](int system_dim, int env_count, int env_cap, int lo_dim) {
             return BasisEnumeration(ModeLayout{system_dim, env_count, env_cap, lo_dim});
           }),
           py::arg("system_dim"), py::arg("env_count"), py::arg("env_cap"), py::arg("lo_dim") = 0)
      .def_property_readonly("dimension", &BasisEnumeration::dimension)
      .def(
          "index_of",
          [](const BasisEnumeration& b, int system_n, const std::vector<int>& sites, int lo_n) {
            OccupationState occ;
            occ.system_n = system_n;
            occ.env_bits.assign(static_cast<std::size_t>(b.layout().env_count), 0);
            for (int s : sites) {
              if (s < 0 || s >= b.layout().env_count) throw InvalidArgument("site out of range");
              occ.env_bits[static_cast<std::size_t>(s)] = 1;
            }
            occ.lo_n = lo_n;
            return b.index_of(occ);
          },
          py::arg("system_n"), py::arg("sites"), py::arg("lo_n") = 0)
      .def("occupation_of", [](const BasisEnumeration& b, Index i) {
        const OccupationState occ = b.occupation_of(i);
        std::vector<int> sites;
        for (std::size_t s = 0; s < occ.env_bits.size(); ++s)
          if (occ.env_bits[s]) sites.push_back(static_cast<int>(s));
        return py::make_tuple(occ.system_n, sites, occ.lo_n);
      });

  m.def(
      "homodyne_eigensystem",
      [](int lo_dim) {
        py::list out;
        for (const QEigenvector& v : homodyne_eigensystem(lo_dim).vectors)
          out.append(py::make_tuple(v.label, v.eigenvalue, v.lo_unexcited, v.coeff_unexcited, v.lo_excited,
                                    v.coeff_excited));
        return out;
      },
      py::arg("lo_dim"),
      "(label, eigenvalue, lo_unexcited, coeff_unexcited, lo_excited, coeff_excited) per eigenvector.");
  m.def("coherent_amplitudes", &coherent_amplitudes, py::arg("beta"), py::arg("dim"),
        py::arg("max_leakage") = 1e-8);

  m.def(
      "coupling_amplitudes",
      [](const std::string& text) {
        const TrajectoryConfig t = load(text).trajectory;
        return to_array(build_coupling(t.coupling, t.layout.env_count, t.dt).gammas);
      },
      py::arg("text"));
  m.def(
      "coupling_spectrum",
      [](const std::string& text) {
        const TrajectoryConfig t = load(text).trajectory;
        const SpectralProfile s = coupling_spectrum(build_coupling(t.coupling, t.layout.env_count, t.dt), t.dt);
        std::vector<double> signed_omega(s.omegas.size()), density(s.omegas.size());
        for (std::size_t k = 0; k < s.omegas.size(); ++k) {
          signed_omega[k] = s.signed_omega(k);
          density[k] = s.density(k);
        }
        py::dict out;
        out["omega"] = to_array(s.omegas);
        out["signed_omega"] = to_array(signed_omega);
        out["kappa"] = to_array(s.kappas);
        out["density"] = to_array(density);
        out["length"] = s.length;
        return out;
      },
      py::arg("text"));
  m.def("lorentzian_density", &lorentzian_density, py::arg("rate"), py::arg("memory_rate"), py::arg("omega"));

  m.def(
      "run_trajectory",
      [](const std::string& text, std::uint64_t index) {
        const TrajectoryConfig t = load(text).trajectory;
        Trajectory traj;
        {
          py::gil_scoped_release release;
          traj = run_trajectory(t, index);
        }
        return trajectory_dict(traj, t.record.observables);
      },
      py::arg("text"), py::arg("index") = 0);

  m.def(
      "run_ensemble",
      [](const std::string& text, std::optional<std::uint64_t> trajectories, std::optional<int> threads) {
        const RunConfig rc = load(text);
        EnsembleOptions options;
        options.n_trajectories = trajectories.value_or(rc.n_trajectories);
        options.threads = threads.value_or(rc.threads);
        options.counting = rc.counting;
        EnsembleStats stats;
        {
          py::gil_scoped_release release;
          stats = run_ensemble(rc.trajectory, options);
        }
        return ensemble_dict(stats);
      },
      py::arg("text"), py::arg("trajectories") = py::none(), py::arg("threads") = py::none());

  m.def(
      "markovian_lindblad",
      [](int dim, double rate, const std::vector<double>& times, double ports, double omega, double zeta,
         const std::vector<Complex>& initial) {
        MarkovianSystem system{dim, hamiltonian_from(omega, zeta), initial, {}};
        std::vector<DensityMatrix> rhos;
        {
          py::gil_scoped_release release;
          rhos = lindblad_solve(markovian_lindblad(system, rate, times, ports));
        }
        return rhos;
      },
      py::arg("dim"), py::arg("rate"), py::arg("times"), py::arg("ports") = 1.0, py::arg("omega") = 0.0,
      py::arg("zeta") = 0.0, py::arg("initial") = std::vector<Complex>{},
      "System density matrices of the Markovian master equation at `times`.");

  m.def(
      "jc_pseudomode",
      [](double rate, double memory_rate, double omega, int cavity_dim, const std::vector<double>& times) {
        std::vector<DensityMatrix> rhos;
        {
          py::gil_scoped_release release;
          for (const DensityMatrix& rho : lindblad_solve(jc_pseudomode(rate, memory_rate, omega, cavity_dim, times)))
            rhos.push_back(trace_out_cavity(rho, cavity_dim));
        }
        return rhos;
      },
      py::arg("rate"), py::arg("memory_rate"), py::arg("omega"), py::arg("cavity_dim"), py::arg("times"),
      "Qubit density matrices of the pseudomode model at `times`.");

  m.def(
      "single_excitation",
      [](const std::string& text, double horizon) {
        const TrajectoryConfig t = load(text).trajectory;
        const CouplingProfile profile = build_coupling(t.coupling, t.layout.env_count, t.dt);
        return amplitude_dict(single_excitation_schrodinger(profile, t.dt, horizon));
      },
      py::arg("text"), py::arg("horizon"));

  m.def(
      "feedback_dde",
      [](double gamma0, double gamma_fb, double phase, double delay, double horizon, double step) {
        return amplitude_dict(feedback_dde(DDESpec{gamma0, gamma_fb, phase, delay, horizon, step}));
      },
      py::arg("gamma0"), py::arg("gamma_fb"), py::arg("phase"), py::arg("delay"), py::arg("horizon"),
      py::arg("step"));

  m.def(
      "calibrate_feedback_dde",
      [](double rate, double phase, int delay_steps, double dt, double horizon, double tolerance) {
        const DDECalibration cal = calibrate_feedback_dde(rate, phase, delay_steps, dt, horizon, tolerance);
        py::dict out;
        out["gamma0"] = cal.spec.gamma0;
        out["gamma_fb"] = cal.spec.gamma_fb;
        out["max_error"] = cal.max_error;
        out["reference"] = amplitude_dict(cal.reference);
        out["fitted"] = amplitude_dict(cal.fitted);
        return out;
      },
      py::arg("rate"), py::arg("phase"), py::arg("delay_steps"), py::arg("dt"), py::arg("horizon"),
      py::arg("tolerance") = 0.01);
}
