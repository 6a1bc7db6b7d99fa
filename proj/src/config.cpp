#include "colltraj/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "colltraj/errors.hpp"

namespace colltraj {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed view of one JSON object. Every key read is remembered so `finish`
// can reject the rest.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return node_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!node_.contains(key)) throw ConfigError(join(path_, key), "required key is missing");
    return node_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(join(path_, key), "expected a finite number");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

  long long integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(join(path_, key), "expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT32_MAX))
      throw ConfigError(join(path_, key), "integer out of range");
    const long long x = v.get<long long>();
    if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(join(path_, key), "integer out of range");
    return x;
  }
  long long integer(const std::string& key, long long fallback) {
    return has(key) ? integer(key) : mark(key, fallback);
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
      throw ConfigError(join(path_, key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_integer(key) : mark(key, fallback);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return mark(key, fallback);
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : mark(key, fallback);
  }

  Section child(const std::string& key) { return Section(raw(key), join(path_, key)); }

  std::vector<Complex> complex_list(const std::string& key) {
    const json& v = raw(key);
    const std::string where = join(path_, key);
    if (!v.is_array()) throw ConfigError(where, "expected an array of numbers or [re, im] pairs");
    std::vector<Complex> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const json& e = v[i];
      const std::string at = where + "[" + std::to_string(i) + "]";
      if (e.is_number()) {
        out.emplace_back(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        out.emplace_back(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ConfigError(at, "expected a number or an [re, im] pair");
      }
      if (!std::isfinite(out.back().real()) || !std::isfinite(out.back().imag()))
        throw ConfigError(at, "expected finite values");
    }
    return out;
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
  }

 private:
  template <class T>
  T mark(const std::string& key, T value) {
    seen_.insert(key);
    return value;
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

int positive_int(Section& s, const std::string& key, long long value, long long min = 1) {
  if (value < min) throw ConfigError(join(s.path(), key), "must be >= " + std::to_string(min));
  return static_cast<int>(value);
}

double positive(Section& s, const std::string& key, double value) {
  if (!(value > 0.0)) throw ConfigError(join(s.path(), key), "must be positive");
  return value;
}

double non_negative(Section& s, const std::string& key, double value) {
  if (!(value >= 0.0)) throw ConfigError(join(s.path(), key), "must be >= 0");
  return value;
}

// Time converted to a whole number of steps; the time must be a multiple of dt.
int steps_of(Section& s, const std::string& key, double time, double dt) {
  const double ratio = time / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio))
    throw ConfigError(join(s.path(), key), "must be an integer multiple of dt");
  if (rounded > INT32_MAX) throw ConfigError(join(s.path(), key), "too many steps");
  return static_cast<int>(rounded);
}

RunMode parse_mode(Section& s) {
  const std::string m = s.string("mode");
  if (m == "trajectory") return RunMode::kTrajectory;
  if (m == "ensemble") return RunMode::kEnsemble;
  if (m == "oracle") return RunMode::kOracle;
  if (m == "compare") return RunMode::kCompare;
  if (m == "spectrum") return RunMode::kSpectrum;
  throw ConfigError("mode", "expected one of trajectory, ensemble, oracle, compare, spectrum");
}

void parse_system(Section& root, TrajectoryConfig& cfg) {
  if (!root.has("system")) return;
  Section s = root.child("system");
  cfg.layout.system_dim = positive_int(s, "dim", s.integer("dim", 2), 2);
  if (s.has("hamiltonian")) {
    Section h = s.child("hamiltonian");
    const std::string type = h.string("type");
    if (type == "none") {
      cfg.hamiltonian = NoSystemHamiltonian{};
    } else if (type == "driven_qubit") {
      cfg.hamiltonian = DrivenQubit{h.number("omega")};
    } else if (type == "squeezer") {
      cfg.hamiltonian = Squeezer{h.number("zeta")};
      if (cfg.layout.system_dim < 3) throw ConfigError(join(s.path(), "dim"), "squeezer needs dim >= 3");
    } else {
      throw ConfigError(join(h.path(), "type"), "expected none, driven_qubit or squeezer");
    }
    h.finish();
  }
  if (s.has("initial")) {
    Section init = s.child("initial");
    if (init.has("level") == init.has("amplitudes"))
      throw ConfigError(init.path(), "give exactly one of level or amplitudes");
    if (init.has("level")) {
      const long long level = init.integer("level");
      if (level < 0 || level >= cfg.layout.system_dim)
        throw ConfigError(join(init.path(), "level"), "must lie in [0, dim)");
      cfg.initial_state.assign(cfg.layout.system_dim, Complex{});
      cfg.initial_state[level] = 1.0;
    } else {
      cfg.initial_state = init.complex_list("amplitudes");
      if (static_cast<int>(cfg.initial_state.size()) != cfg.layout.system_dim)
        throw ConfigError(join(init.path(), "amplitudes"), "length must equal system.dim");
      double norm = 0.0;
      for (const auto& a : cfg.initial_state) norm += std::norm(a);
      if (!(norm > 0.0)) throw ConfigError(join(init.path(), "amplitudes"), "must not be all zero");
    }
    init.finish();
  }
  s.finish();
}

void parse_environment(Section& root, TrajectoryConfig& cfg) {
  Section e = root.child("environment");
  Section c = e.child("coupling");
  const std::string type = c.string("type");
  int default_sites = 1;
  if (type == "point") {
    cfg.coupling = PointCoupling{non_negative(c, "rate", c.number("rate", 1.0))};
  } else if (type == "feedback") {
    TwoPointFeedback f;
    f.rate = non_negative(c, "rate", c.number("rate", 1.0));
    f.phase = c.number("phase", 0.0);
    if (c.has("delay_steps") == c.has("delay"))
      throw ConfigError(join(c.path(), "delay"), "give exactly one of delay or delay_steps");
    if (c.has("delay_steps")) {
      f.delay_steps = positive_int(c, "delay_steps", c.integer("delay_steps"));
    } else {
      f.delay_steps = steps_of(c, "delay", positive(c, "delay", c.number("delay")), cfg.dt);
      if (f.delay_steps < 1) throw ConfigError(join(c.path(), "delay"), "must be at least one step");
    }
    default_sites = f.delay_steps + 1;
    cfg.coupling = f;
  } else if (type == "exponential") {
    ExponentialCoupling x;
    x.rate = non_negative(c, "rate", c.number("rate", 1.0));
    x.memory_rate = positive(c, "memory_rate", c.number("memory_rate"));
    cfg.coupling = x;
    default_sites = 0;
  } else if (type == "raw") {
    RawCoupling r{c.complex_list("amplitudes")};
    if (r.amplitudes.empty()) throw ConfigError(join(c.path(), "amplitudes"), "must not be empty");
    default_sites = static_cast<int>(r.amplitudes.size());
    cfg.coupling = std::move(r);
  } else {
    throw ConfigError(join(c.path(), "type"), "expected point, feedback, exponential or raw");
  }
  c.finish();

  if (e.has("sites") && e.has("length"))
    throw ConfigError(join(e.path(), "length"), "give at most one of sites or length");
  if (e.has("sites")) {
    cfg.layout.env_count = positive_int(e, "sites", e.integer("sites"));
  } else if (e.has("length")) {
    cfg.layout.env_count = steps_of(e, "length", positive(e, "length", e.number("length")), cfg.dt);
    if (cfg.layout.env_count < 1) throw ConfigError(join(e.path(), "length"), "must cover at least one site");
  } else if (default_sites > 0) {
    cfg.layout.env_count = default_sites;
  } else {
    e.raw("sites");
  }
  if (const auto* f = std::get_if<TwoPointFeedback>(&cfg.coupling); f && f->delay_steps >= cfg.layout.env_count)
    throw ConfigError(join(e.path(), "sites"), "feedback needs more sites than delay steps");
  if (const auto* r = std::get_if<RawCoupling>(&cfg.coupling);
      r && static_cast<int>(r->amplitudes.size()) > cfg.layout.env_count)
    throw ConfigError(join(e.path(), "sites"), "fewer sites than raw amplitudes");
  cfg.layout.env_cap = positive_int(e, "cap", e.integer("cap", 1), 0);
  if (cfg.layout.env_cap > cfg.layout.env_count)
    throw ConfigError(join(e.path(), "cap"), "must not exceed the number of sites");
  e.finish();
}

void parse_scheme(Section& root, TrajectoryConfig& cfg) {
  Section s = root.child("scheme");
  const std::string type = s.string("type");
  if (type == "photodetection") {
    const long long lo = s.integer("lo_dim", 0);
    if (lo != 0) throw ConfigError(join(s.path(), "lo_dim"), "photodetection has no local oscillator (lo_dim must be 0)");
    cfg.scheme = Photodetection{};
    cfg.layout.lo_dim = 0;
  } else if (type == "homodyne") {
    Homodyne h;
    if (s.has("amplitude") && s.has("alpha_squared"))
      throw ConfigError(join(s.path(), "alpha_squared"), "give at most one of amplitude or alpha_squared");
    if (s.has("alpha_squared")) {
      h.amplitude = std::sqrt(non_negative(s, "alpha_squared", s.number("alpha_squared")));
    } else {
      h.amplitude = non_negative(s, "amplitude", s.number("amplitude"));
    }
    h.phase = s.number("phase", 0.0);
    h.lo_dim = positive_int(s, "lo_dim", s.integer("lo_dim"), 2);
    cfg.scheme = h;
    cfg.layout.lo_dim = h.lo_dim;
  } else {
    throw ConfigError(join(s.path(), "type"), "expected photodetection or homodyne");
  }
  s.finish();
}

void parse_record(Section& root, TrajectoryConfig& cfg) {
  if (!root.has("record")) return;
  Section r = root.child("record");
  if (r.has("observables")) {
    const json& list = r.raw("observables");
    const std::string where = join(r.path(), "observables");
    if (!list.is_array()) throw ConfigError(where, "expected an array of names");
    cfg.record.observables.clear();
    for (const auto& name : list) {
      if (!name.is_string()) throw ConfigError(where, "expected an array of names");
      const std::string n = name.get<std::string>();
      if (n != "n" && n != "x" && n != "y") throw ConfigError(where, "unknown observable '" + n + "' (expected n, x or y)");
      cfg.record.observables.push_back(n);
    }
  }
  cfg.record.stride = positive_int(r, "stride", r.integer("stride", 1));
  cfg.record.rho_stride = positive_int(r, "rho_stride", r.integer("rho_stride", 10), 0);
  if (cfg.record.rho_stride % cfg.record.stride != 0)
    throw ConfigError(join(r.path(), "rho_stride"), "must be 0 or a multiple of stride");
  r.finish();
}

PropagatorMethod parse_method(Section& p) {
  const std::string m = p.string("method", "auto");
  if (m == "runge_kutta") return PropagatorMethod::kRungeKutta;
  if (m == "krylov") return PropagatorMethod::kKrylov;
  if (m == "block_exponential") return PropagatorMethod::kBlockExponential;
  if (m == "auto") return PropagatorMethod::kAuto;
  throw ConfigError(join(p.path(), "method"), "expected runge_kutta, krylov, block_exponential or auto");
}

void parse_propagator(Section& root, TrajectoryConfig& cfg) {
  if (!root.has("propagator")) return;
  Section p = root.child("propagator");
  PropagatorConfig& pc = cfg.propagator;
  pc.method = parse_method(p);
  pc.rel_tol = p.number("rel_tol", pc.rel_tol);
  if (!(pc.rel_tol > 0.0) || pc.rel_tol > 1e-4) throw ConfigError(join(p.path(), "rel_tol"), "must lie in (0, 1e-4]");
  pc.max_substeps = positive_int(p, "max_substeps", p.integer("max_substeps", pc.max_substeps));
  pc.krylov_dim = positive_int(p, "krylov_dim", p.integer("krylov_dim", pc.krylov_dim), 2);
  pc.max_block = positive_int(p, "max_block", p.integer("max_block", pc.max_block));
  p.finish();
}

OracleKind parse_oracle_kind(Section& o) {
  const std::string k = o.string("kind");
  if (k == "lindblad") return OracleKind::kLindblad;
  if (k == "mcwf") return OracleKind::kMcwf;
  if (k == "jc_pseudomode") return OracleKind::kJcPseudomode;
  if (k == "single_excitation") return OracleKind::kSingleExcitation;
  if (k == "feedback_dde") return OracleKind::kFeedbackDde;
  throw ConfigError(join(o.path(), "kind"),
                    "expected lindblad, mcwf, jc_pseudomode, single_excitation or feedback_dde");
}

void check_oracle_fit(const RunConfig& rc) {
  const auto& t = rc.trajectory;
  const std::string key = "oracle.kind";
  switch (rc.oracle->kind) {
    case OracleKind::kLindblad:
      if (std::holds_alternative<RawCoupling>(t.coupling))
        throw ConfigError(key, "lindblad oracle needs a point, feedback or exponential coupling rate");
      break;
    case OracleKind::kMcwf:
      if (!std::holds_alternative<PointCoupling>(t.coupling))
        throw ConfigError(key, "mcwf oracle needs point coupling");
      break;
    case OracleKind::kJcPseudomode:
      if (!std::holds_alternative<ExponentialCoupling>(t.coupling))
        throw ConfigError(key, "jc_pseudomode oracle needs exponential coupling");
      if (t.layout.system_dim != 2) throw ConfigError(key, "jc_pseudomode oracle needs a qubit (system.dim = 2)");
      if (std::holds_alternative<Squeezer>(t.hamiltonian))
        throw ConfigError(key, "jc_pseudomode oracle supports none or driven_qubit");
      break;
    case OracleKind::kSingleExcitation:
      if (!std::holds_alternative<NoSystemHamiltonian>(t.hamiltonian))
        throw ConfigError(key, "single_excitation oracle needs system.hamiltonian.type = none");
      if (t.layout.system_dim != 2) throw ConfigError(key, "single_excitation oracle needs a qubit");
      if (!t.initial_state.empty() && std::abs(t.initial_state[1]) * std::abs(t.initial_state[1]) !=
                                          std::norm(t.initial_state[0]) + std::norm(t.initial_state[1]))
        throw ConfigError(key, "single_excitation oracle starts from the excited state");
      break;
    case OracleKind::kFeedbackDde:
      if (!std::holds_alternative<TwoPointFeedback>(t.coupling))
        throw ConfigError(key, "feedback_dde oracle needs feedback coupling");
      if (!std::holds_alternative<NoSystemHamiltonian>(t.hamiltonian))
        throw ConfigError(key, "feedback_dde oracle needs system.hamiltonian.type = none");
      break;
  }
  if (rc.mode == RunMode::kCompare && rc.oracle->kind == OracleKind::kFeedbackDde)
    throw ConfigError(key, "compare mode does not support feedback_dde; use single_excitation");
}

json complex_json(const std::vector<Complex>& v) {
  json out = json::array();
  for (const auto& c : v) out.push_back(json::array({c.real(), c.imag()}));
  return out;
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kTrajectory: return "trajectory";
    case RunMode::kEnsemble: return "ensemble";
    case RunMode::kOracle: return "oracle";
    case RunMode::kCompare: return "compare";
    case RunMode::kSpectrum: return "spectrum";
  }
  return "?";
}

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::kLindblad: return "lindblad";
    case OracleKind::kMcwf: return "mcwf";
    case OracleKind::kJcPseudomode: return "jc_pseudomode";
    case OracleKind::kSingleExcitation: return "single_excitation";
    case OracleKind::kFeedbackDde: return "feedback_dde";
  }
  return "?";
}

std::string to_string(PropagatorMethod method) {
  switch (method) {
    case PropagatorMethod::kRungeKutta: return "runge_kutta";
    case PropagatorMethod::kKrylov: return "krylov";
    case PropagatorMethod::kBlockExponential: return "block_exponential";
    case PropagatorMethod::kAuto: return "auto";
  }
  return "?";
}

RunConfig parse_config(const json& document) {
  Section root(document, "");
  RunConfig rc;
  rc.mode = parse_mode(root);
  rc.out_dir = root.string("out_dir", rc.out_dir);
  if (rc.out_dir.empty()) throw ConfigError("out_dir", "must not be empty");

  TrajectoryConfig& t = rc.trajectory;
  t.master_seed = root.unsigned_integer("seed", 0);
  t.dt = positive(root, "dt", root.number("dt"));
  if (root.has("n_steps") == root.has("duration"))
    throw ConfigError("n_steps", "give exactly one of n_steps or duration");
  if (root.has("n_steps")) {
    t.n_steps = positive_int(root, "n_steps", root.integer("n_steps"));
  } else {
    t.n_steps = steps_of(root, "duration", positive(root, "duration", root.number("duration")), t.dt);
    if (t.n_steps < 1) throw ConfigError("duration", "must cover at least one step");
  }
  parse_system(root, t);
  parse_environment(root, t);
  parse_scheme(root, t);
  parse_record(root, t);
  parse_propagator(root, t);
  t.factored_lo = root.boolean("factored_lo", true);
  for (const auto& name : t.record.observables)
    if (t.layout.system_dim < 2 && name != "n") throw ConfigError("record.observables", "needs system.dim >= 2");

  if (root.has("ensemble")) {
    Section e = root.child("ensemble");
    rc.n_trajectories = e.unsigned_integer("trajectories", 1);
    if (rc.n_trajectories < 1) throw ConfigError("ensemble.trajectories", "must be >= 1");
    rc.threads = positive_int(e, "threads", e.integer("threads", 1));
    rc.keep_trajectories = e.unsigned_integer("keep", rc.keep_trajectories);
    e.finish();
  }
  if (root.has("counting")) {
    Section c = root.child("counting");
    CountingOptions co;
    co.window = non_negative(c, "window", c.number("window"));
    co.burn_in = non_negative(c, "burn_in", c.number("burn_in", 0.0));
    co.bin_width = positive(c, "bin_width", c.number("bin_width", 1.0));
    co.center = c.number("center", 0.0);
    if (co.burn_in + co.window > t.n_steps * t.dt * (1.0 + 1e-12))
      throw ConfigError("counting.window", "burn_in + window exceeds the run duration");
    c.finish();
    rc.counting = co;
  }
  if (root.has("oracle")) {
    Section o = root.child("oracle");
    OracleOptions oo;
    oo.kind = parse_oracle_kind(o);
    oo.ports = positive(o, "ports", o.number("ports", 1.0));
    oo.cavity_dim = positive_int(o, "cavity_dim", o.integer("cavity_dim", 2), 2);
    oo.dde_tolerance = positive(o, "dde_tolerance", o.number("dde_tolerance", 0.01));
    oo.mcwf_dt = non_negative(o, "mcwf_dt", o.number("mcwf_dt", 0.0));
    o.finish();
    rc.oracle = oo;
  }
  root.finish();

  if ((rc.mode == RunMode::kOracle || rc.mode == RunMode::kCompare) && !rc.oracle)
    throw ConfigError("oracle", "required key is missing for mode " + to_string(rc.mode));
  if (rc.oracle) check_oracle_fit(rc);
  if (rc.oracle && rc.oracle->mcwf_dt > 0.0) {
    const double ratio = t.dt / rc.oracle->mcwf_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio)
      throw ConfigError("oracle.mcwf_dt", "must divide dt into a whole number of steps");
  }
  try {
    t.validate();
    if (rc.mode != RunMode::kSpectrum && rc.mode != RunMode::kOracle) basis_dimension(t.layout);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("", e.what());
  }
  return rc;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

json to_json(const TrajectoryConfig& t) {
  json doc;
  doc["seed"] = t.master_seed;
  doc["dt"] = t.dt;
  doc["n_steps"] = t.n_steps;

  json system;
  system["dim"] = t.layout.system_dim;
  system["hamiltonian"] = std::visit(Overloaded{
                                         [](const NoSystemHamiltonian&) { return json{{"type", "none"}}; },
                                         [](const DrivenQubit& d) { return json{{"type", "driven_qubit"}, {"omega", d.omega}}; },
                                         [](const Squeezer& s) { return json{{"type", "squeezer"}, {"zeta", s.zeta}}; },
                                     },
                                     t.hamiltonian);
  if (!t.initial_state.empty()) system["initial"] = json{{"amplitudes", complex_json(t.initial_state)}};
  doc["system"] = system;

  json coupling = std::visit(
      Overloaded{
          [](const PointCoupling& p) { return json{{"type", "point"}, {"rate", p.rate}}; },
          [](const TwoPointFeedback& f) {
            return json{{"type", "feedback"}, {"rate", f.rate}, {"phase", f.phase}, {"delay_steps", f.delay_steps}};
          },
          [](const ExponentialCoupling& x) {
            return json{{"type", "exponential"}, {"rate", x.rate}, {"memory_rate", x.memory_rate}};
          },
          [](const RawCoupling& r) { return json{{"type", "raw"}, {"amplitudes", complex_json(r.amplitudes)}}; },
      },
      t.coupling);
  doc["environment"] = json{{"sites", t.layout.env_count}, {"cap", t.layout.env_cap}, {"coupling", coupling}};

  if (const auto* h = std::get_if<Homodyne>(&t.scheme)) {
    doc["scheme"] = json{{"type", "homodyne"}, {"amplitude", h->amplitude}, {"phase", h->phase}, {"lo_dim", h->lo_dim}};
  } else {
    doc["scheme"] = json{{"type", "photodetection"}};
  }
  doc["record"] = json{{"observables", t.record.observables},
                       {"stride", t.record.stride},
                       {"rho_stride", t.record.rho_stride}};
  doc["propagator"] = json{{"method", to_string(t.propagator.method)},
                           {"rel_tol", t.propagator.rel_tol},
                           {"max_substeps", t.propagator.max_substeps},
                           {"krylov_dim", t.propagator.krylov_dim},
                           {"max_block", t.propagator.max_block}};
  doc["factored_lo"] = t.factored_lo;
  return doc;
}

json to_json(const RunConfig& rc) {
  json doc = to_json(rc.trajectory);
  doc["mode"] = to_string(rc.mode);
  doc["out_dir"] = rc.out_dir;
  doc["ensemble"] = json{{"trajectories", rc.n_trajectories}, {"threads", rc.threads}, {"keep", rc.keep_trajectories}};
  if (rc.counting)
    doc["counting"] = json{{"window", rc.counting->window},
                           {"burn_in", rc.counting->burn_in},
                           {"bin_width", rc.counting->bin_width},
                           {"center", rc.counting->center}};
  if (rc.oracle)
    doc["oracle"] = json{{"kind", to_string(rc.oracle->kind)},
                         {"ports", rc.oracle->ports},
                         {"cavity_dim", rc.oracle->cavity_dim},
                         {"dde_tolerance", rc.oracle->dde_tolerance},
                         {"mcwf_dt", rc.oracle->mcwf_dt}};
  return doc;
}

void apply_override(json& document, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &document;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(path, "empty path component in override");
    if (!node->is_object()) throw ConfigError(path, "override descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

std::string library_version() { return COLLTRAJ_VERSION; }

std::string config_fingerprint(const TrajectoryConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace colltraj
