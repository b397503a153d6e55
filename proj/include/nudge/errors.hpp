#pragma once

#include <stdexcept>
#include <string>

namespace nudge {

/// Precondition or argument violation detected at an API boundary.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data is structurally inconsistent (missing predictions, malformed rows).
class DataIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine produced a non-finite value.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration file could not be parsed or failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nudge
