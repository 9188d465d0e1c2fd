#pragma once

#include <stdexcept>
#include <string>

namespace taxoseq {

/// Bad or inconsistent configuration (config file, flags, invalid settings).
/// CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent input data (taxonomy, dataset, definition,
/// vector or checkpoint files). CLI exit code 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values or other numeric breakdown during training/inference.
/// CLI exit code 4.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace taxoseq
