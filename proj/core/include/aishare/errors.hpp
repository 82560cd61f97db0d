#pragma once

#include <stdexcept>
#include <string>

namespace aishare {

/// Base class for all pipeline errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or structurally broken input files (CLI exit code 1).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data too degenerate for the requested analysis (CLI exit code 3).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

/// Oracle or validation mismatch (CLI exit code 4).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace aishare
