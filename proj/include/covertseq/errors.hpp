#pragma once

#include <stdexcept>
#include <string>

namespace covertseq {

// Numeric calibration could not meet its target (bad bracket, non-finite
// quadrature, overflowing piece counts).
struct CalibrationError : std::runtime_error {
  explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

// Rejection sampling kept too few runs to estimate anything.
struct ConditioningStarvationError : std::runtime_error {
  explicit ConditioningStarvationError(const std::string& what) : std::runtime_error(what) {}
};

// The covert constraint cannot be met by any (q, L) pair.
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// SR thresholds below 1/q are outside the supported regime.
struct SrThresholdError : std::invalid_argument {
  explicit SrThresholdError(const std::string& what) : std::invalid_argument(what) {}
};

// Bad CLI/JSON configuration.
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace covertseq
