#pragma once

#include <stdexcept>
#include <string>

namespace flowshap {

// Error taxonomy shared by the library and the CLI. The CLI maps each family
// to a process exit code: usage/config -> 1, data/schema/parse -> 2,
// everything else -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

// Violated API contract (wrong ensemble kind, dimension mismatch at a typed
// boundary). Maps to the internal-error exit code.
class ContractError : public Error {
 public:
  using Error::Error;
};

inline int exit_code_for(const Error& e) {
  if (dynamic_cast<const UsageError*>(&e) != nullptr) return 1;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return 2;
  return 3;
}

}  // namespace flowshap
