#pragma once

#include <stdexcept>
#include <string>

namespace seqcf {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration (bad spec, unknown identifier, inconsistent dims).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Invalid argument to an operation (index out of range, bad level, ...).
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

/// Estimation is impossible on the given log (e.g. arm never assigned).
class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& msg) : Error(msg) {}
};

/// Interval requested for a fallback estimate, where none is defined.
class IntervalUnavailableError : public Error {
 public:
  explicit IntervalUnavailableError(const std::string& msg) : Error(msg) {}
};

/// Calibration cannot proceed (no overlap, empty split, ...).
class CalibrationError : public Error {
 public:
  explicit CalibrationError(const std::string& msg) : Error(msg) {}
};

/// File / serialization problems.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace seqcf
