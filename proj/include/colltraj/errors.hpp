#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace colltraj {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters outside their documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Requested basis exceeds the configured amplitude ceiling.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A state violates an operation's precondition (e.g. shift before reset).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Integrator failure, NaN, or probabilities that do not sum to one.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A numerical or precondition failure inside one ensemble member.
class TrajectoryFailure : public NumericalError {
 public:
  TrajectoryFailure(std::uint64_t index, const std::string& message)
      : NumericalError("trajectory " + std::to_string(index) + ": " + message), index_(index) {}
  std::uint64_t index() const noexcept { return index_; }

 private:
  std::uint64_t index_;
};

/// Configuration schema or consistency violation. `key` names the offending
/// entry as a dotted path.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace colltraj
