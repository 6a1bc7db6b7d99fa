#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "colltraj/config.hpp"
#include "colltraj/errors.hpp"

using namespace colltraj;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigs = COLLTRAJ_CONFIG_DIR;

json minimal() {
  return json::parse(R"({
    "mode": "ensemble",
    "dt": 0.01,
    "n_steps": 10,
    "environment": {"coupling": {"type": "point", "rate": 1.0}},
    "scheme": {"type": "photodetection"}
  })");
}

std::string error_key(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const RunConfig rc = parse_config(minimal());
  EXPECT_EQ(rc.mode, RunMode::kEnsemble);
  EXPECT_EQ(rc.trajectory.layout.system_dim, 2);
  EXPECT_EQ(rc.trajectory.layout.env_count, 1);
  EXPECT_EQ(rc.trajectory.layout.env_cap, 1);
  EXPECT_EQ(rc.trajectory.layout.lo_dim, 0);
  EXPECT_EQ(rc.trajectory.n_steps, 10);
  EXPECT_EQ(rc.trajectory.master_seed, 0u);
  EXPECT_TRUE(std::holds_alternative<PointCoupling>(rc.trajectory.coupling));
}

TEST(Config, ErrorsNameTheOffendingKey) {
  json d = minimal();
  d["bogus"] = 1;
  EXPECT_EQ(error_key(d), "bogus");

  d = minimal();
  d["environment"]["coupling"]["rate"] = "fast";
  EXPECT_EQ(error_key(d), "environment.coupling.rate");

  d = minimal();
  d.erase("scheme");
  EXPECT_EQ(error_key(d), "scheme");

  d = minimal();
  d["scheme"]["lo_dim"] = 5;
  EXPECT_EQ(error_key(d), "scheme.lo_dim");

  d = minimal();
  d["duration"] = 1.0;
  EXPECT_EQ(error_key(d), "n_steps");

  d = minimal();
  d["dt"] = -0.1;
  EXPECT_EQ(error_key(d), "dt");

  d = minimal();
  d["scheme"] = {{"type", "homodyne"}, {"amplitude", 1.0}};
  EXPECT_EQ(error_key(d), "scheme.lo_dim");

  d = minimal();
  d["environment"]["coupling"] = {{"type", "feedback"}, {"delay", 0.005}};
  EXPECT_EQ(error_key(d), "environment.coupling.delay");

  d = minimal();
  d["environment"]["coupling"] = {{"type", "feedback"}, {"delay_steps", 5}};
  d["environment"]["sites"] = 5;
  EXPECT_EQ(error_key(d), "environment.sites");

  d = minimal();
  d["record"] = {{"observables", {"n", "sz"}}};
  EXPECT_EQ(error_key(d), "record.observables");

  d = minimal();
  d["record"] = {{"stride", 3}, {"rho_stride", 10}};
  EXPECT_EQ(error_key(d), "record.rho_stride");

  d = minimal();
  d["mode"] = "compare";
  EXPECT_EQ(error_key(d), "oracle");

  d = minimal();
  d["oracle"] = {{"kind", "jc_pseudomode"}};
  EXPECT_EQ(error_key(d), "oracle.kind");

  d = minimal();
  d["system"] = {{"dim", 2}, {"initial", {{"level", 2}}}};
  EXPECT_EQ(error_key(d), "system.initial.level");
}

TEST(Config, MalformedTextIsAConfigError) {
  EXPECT_THROW(parse_config_text("{\"mode\": "), ConfigError);
  EXPECT_THROW(parse_config_file(kConfigs / "does_not_exist.json"), ConfigError);
}

TEST(Config, FeedbackHomodyneGeometry) {
  const RunConfig rc = parse_config_file(kConfigs / "feedback_homodyne.json");
  const auto& t = rc.trajectory;
  const auto& f = std::get<TwoPointFeedback>(t.coupling);
  EXPECT_EQ(f.delay_steps, 50);
  EXPECT_EQ(t.layout.env_count, 51);
  EXPECT_EQ(t.layout.env_cap, 2);
  EXPECT_EQ(t.n_steps, 500);
  const auto& h = std::get<Homodyne>(t.scheme);
  EXPECT_NEAR(h.amplitude * std::sqrt(t.dt), 1.0, 1e-12);
  EXPECT_EQ(h.lo_dim, 250);
}

TEST(Config, ShippedConfigsParseAndRoundTrip) {
  for (const auto& entry : std::filesystem::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().filename().string());
    const RunConfig rc = parse_config_file(entry.path());
    const json canonical = to_json(rc);
    const RunConfig back = parse_config(canonical);
    EXPECT_EQ(back, rc);
    EXPECT_EQ(to_json(back), canonical);
  }
}

TEST(Config, RoundTripKeepsComplexAmplitudes) {
  json d = minimal();
  d["environment"]["coupling"] = {{"type", "raw"}, {"amplitudes", {0.1, {0.2, -0.3}}}};
  d["environment"]["sites"] = 4;
  d["system"] = {{"dim", 3}, {"initial", {{"amplitudes", {{0.0, 1.0}, 0.5, 0.0}}}}};
  const RunConfig rc = parse_config(d);
  EXPECT_EQ(std::get<RawCoupling>(rc.trajectory.coupling).amplitudes[1], Complex(0.2, -0.3));
  EXPECT_EQ(parse_config(to_json(rc)), rc);
}

TEST(Config, Overrides) {
  json d = minimal();
  apply_override(d, "seed=42");
  apply_override(d, "environment.coupling.rate=2.5");
  apply_override(d, "out_dir=results/a");
  apply_override(d, "propagator.method=krylov");
  const RunConfig rc = parse_config(d);
  EXPECT_EQ(rc.trajectory.master_seed, 42u);
  EXPECT_DOUBLE_EQ(std::get<PointCoupling>(rc.trajectory.coupling).rate, 2.5);
  EXPECT_EQ(rc.out_dir, "results/a");
  EXPECT_EQ(rc.trajectory.propagator.method, PropagatorMethod::kKrylov);
  EXPECT_THROW(apply_override(d, "no_equals_sign"), ConfigError);
}

TEST(Config, FingerprintTracksTrajectoryContent) {
  const RunConfig a = parse_config(minimal());
  json d = minimal();
  d["out_dir"] = "elsewhere";
  d["ensemble"] = {{"trajectories", 7}};
  const RunConfig b = parse_config(d);
  EXPECT_EQ(config_fingerprint(a.trajectory), config_fingerprint(b.trajectory));
  d["seed"] = 1;
  EXPECT_NE(config_fingerprint(a.trajectory), config_fingerprint(parse_config(d).trajectory));
  EXPECT_FALSE(library_version().empty());
}
