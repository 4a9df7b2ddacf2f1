#pragma once

#include <stdexcept>
#include <string>

namespace prism {

// Base of every error the toolkit throws. The CLI maps SpecError to exit
// code 2 and every other prism::Error to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid experiment/CLI configuration.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Input data that violates a contract (bad CSV, degenerate classes, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// On-disk embedding store whose files disagree with meta.json.
class CorruptionError : public DataError {
 public:
  using DataError::DataError;
};

class VersionError : public DataError {
 public:
  using DataError::DataError;
};

// Iterative solver gave up.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations)
      : Error(what), iterations_(iterations) {}
  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

// Chat endpoint unreachable or kept failing.
class EndpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace prism
