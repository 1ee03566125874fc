// errors.hpp - Exception taxonomy shared by the library and the CLI.
//
// Every error carries the process exit code the CLI maps it to:
//   2 = configuration error, 3 = data error, 4 = numeric/training error.

#pragma once

#include <stdexcept>
#include <string>

namespace hydro {

class Error : public std::runtime_error {
 public:
  Error(const std::string& msg, int exit_code)
      : std::runtime_error(msg), exit_code_(exit_code) {}

  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg, 2) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg, 3) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg, 4) {}
};

// Data-error kinds. Kept as distinct types so tests can pin the contract
// violated, not just the broad category.

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class DomainError : public DataError {
 public:
  using DataError::DataError;
};

class ContractError : public DataError {
 public:
  using DataError::DataError;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

class IngestionError : public DataError {
 public:
  using DataError::DataError;
};

class ImputationError : public DataError {
 public:
  using DataError::DataError;
};

class LookupError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateInputError : public DataError {
 public:
  using DataError::DataError;
};

class HarmonizationError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class TrainingError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace hydro
