#pragma once

#include <stdexcept>
#include <string>

namespace lowmach {

/// Invalid or incomplete run configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A simulation left the admissible state space (vacuum, non-finite values,
/// blow-up). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Density reached zero or below somewhere on the grid.
class VacuumError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

/// Snapshot/CSV/config file could not be read or written. Maps to exit code 4.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace lowmach
