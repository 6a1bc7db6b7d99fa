#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "colltraj/engine.hpp"

namespace colltraj {

enum class RunMode { kTrajectory, kEnsemble, kOracle, kCompare, kSpectrum };

enum class OracleKind {
  kLindblad,           ///< Markovian master equation, collapse √(ports·γ)·a
  kMcwf,               ///< conventional jump unraveling matching the scheme
  kJcPseudomode,       ///< qubit ⊗ damped cavity for exponential coupling
  kSingleExcitation,   ///< exact one-excitation amplitude
  kFeedbackDde,        ///< calibrated delay-differential amplitude
};

struct OracleOptions {
  OracleKind kind = OracleKind::kLindblad;
  /// Number of Markovian ports for the Lindblad oracle (2 for the feedback
  /// geometry before the delay has elapsed).
  double ports = 1.0;
  int cavity_dim = 2;
  /// Allowed calibration mismatch for kFeedbackDde.
  double dde_tolerance = 0.01;
  /// Time step of the conventional jump oracle; 0 means the run's dt.
  double mcwf_dt = 0.0;

  friend bool operator==(const OracleOptions&, const OracleOptions&) = default;
};

struct RunConfig {
  RunMode mode = RunMode::kEnsemble;
  TrajectoryConfig trajectory;
  std::uint64_t n_trajectories = 1;
  int threads = 1;
  /// Leading trajectories written to trajectories.ndjson in ensemble and
  /// compare modes.
  std::uint64_t keep_trajectories = 20;
  std::optional<CountingOptions> counting;
  std::optional<OracleOptions> oracle;
  std::string out_dir = "out";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

std::string to_string(RunMode mode);
std::string to_string(OracleKind kind);
std::string to_string(PropagatorMethod method);

/// Validate and convert a configuration document. Unknown keys, wrong types
/// and inconsistent combinations throw ConfigError naming the dotted key.
RunConfig parse_config(const nlohmann::json& document);
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);

/// Canonical document that parse_config maps back to an equal RunConfig.
nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const TrajectoryConfig& config);

/// Apply `key.path=value` to a document; `value` is read as JSON when it
/// parses, otherwise as a string. Intermediate objects are created.
void apply_override(nlohmann::json& document, const std::string& assignment);

/// Version string of the library build.
std::string library_version();

/// Short stable hash of the canonical trajectory configuration.
std::string config_fingerprint(const TrajectoryConfig& config);

}  // namespace colltraj
