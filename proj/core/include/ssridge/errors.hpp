#pragma once

#include <stdexcept>
#include <string>

namespace ssridge {

// Base of everything the library throws. Callers that only care about
// "something numerical went wrong" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument values (rho outside (0,1), k > n, theta outside [0,1], ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed or non-finite input data.
class InputError : public Error {
 public:
  using Error::Error;
};

// Missing ground truth or other unmet preconditions on a Dataset.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A self-consistency denominator became nonpositive.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A monotone equation has no root inside the reachable range.
class NoSolutionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations);

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace ssridge
