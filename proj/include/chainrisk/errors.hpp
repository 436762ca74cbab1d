#pragma once

#include <stdexcept>
#include <string>

namespace chainrisk {

/// Invalid problem/experiment configuration (maps to CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument to a library operation.
struct InputError : std::invalid_argument {
  explicit InputError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Numerical failure: non-convergence, degenerate moments, etc.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Singular system where an invertible one is required (e.g. ridge at lambda = 0).
struct RankDeficiencyError : NumericError {
  explicit RankDeficiencyError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace chainrisk
