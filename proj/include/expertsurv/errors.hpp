#pragma once

#include <stdexcept>
#include <string>

namespace expertsurv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (t <= 0, q outside (0,1), ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Parameter vector violates the constraints of its family.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Quadrature, root finding or normalization failed to reach tolerance.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An optimizer did not converge; `what()` carries the diagnostics.
class FitFailure : public Error {
 public:
  using Error::Error;
};

// Elicited family cannot represent the judgments (e.g. Beta with UPL = 1).
class UnsupportedFamily : public Error {
 public:
  using Error::Error;
};

// A precondition of an inference routine was not met.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration or input file. `pointer()` is a JSON pointer or
// "line N" locator.
class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& message)
      : Error(pointer.empty() ? message : pointer + ": " + message), pointer_(std::move(pointer)) {}

  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace expertsurv
