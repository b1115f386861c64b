#pragma once

#include <stdexcept>
#include <string>

namespace tda {

// Failure categories map onto distinct process exit codes in the CLI.
enum class ErrorKind { validation, io, computation };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad parameters, malformed inputs, configuration mismatches.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

// Numerical failures (division by zero, divergence).
class ComputationError : public Error {
 public:
  explicit ComputationError(const std::string& what)
      : Error(ErrorKind::computation, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
      return 2;
    case ErrorKind::io:
      return 3;
    case ErrorKind::computation:
      return 4;
  }
  return 1;
}

}  // namespace tda
