#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "colltraj/config.hpp"

namespace colltraj::cli {

enum ExitCode : int { kOk = 0, kConfigFailure = 1, kNumericalFailure = 2 };

struct RunRequest {
  RunConfig config;
  /// Trajectory index used by mode=trajectory.
  std::uint64_t trajectory_index = 0;
};

struct RunReport {
  std::vector<std::filesystem::path> outputs;
  nlohmann::json extra;  ///< mode-specific summary copied into the manifest
};

/// Run one configuration, writing its outputs into `config.out_dir`. The
/// manifest is written before the work starts and finalized with checksums
/// afterwards. On failure every file this run created is removed and the
/// exception is rethrown.
RunReport execute(const RunRequest& request);

/// Hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

/// Decimal with 17 significant digits; round-trips every double.
std::string format_double(double value);

/// Full command-line entry point; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace colltraj::cli
