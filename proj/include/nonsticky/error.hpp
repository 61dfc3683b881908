#pragma once

#include <stdexcept>
#include <string>

namespace nonsticky {

/// Base class of everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad level, missing field, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A coefficient evaluated to a non-finite number.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, double x) : Error(what), x_(x) {}
  double x() const noexcept { return x_; }

 private:
  double x_;
};

/// Quadrature failed to reach its tolerance.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// The Euler recursion produced a non-finite state.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace nonsticky
