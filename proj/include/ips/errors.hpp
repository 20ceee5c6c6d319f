#pragma once

#include <stdexcept>
#include <string>

namespace ips {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A caller violated a documented precondition (bad parameter, wrong system
// kind, point outside a chart, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

// An operation that requires a hyperbolic periodic point was invoked on a
// nonhyperbolic one.  Carries the offending eigenvalue modulus as a witness.
class NonHyperbolicError : public Error {
public:
  NonHyperbolicError(const std::string& what, double witness_modulus)
      : Error(what), witness_modulus(witness_modulus) {}
  double witness_modulus;
};

// An iterative routine (Newton inversion, shadowing fixed point) failed to
// converge within its budget.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

// A configuration file could not be parsed or is missing required keys.
class ConfigError : public Error {
public:
  using Error::Error;
};

// The sampled nonlinear remainder of the system exceeds the budget that the
// requested gluing needs; the defect scale d must shrink.  Carries the
// measured sup of the remainder over the inspection ball.
class RemainderBoundError : public Error {
public:
  RemainderBoundError(const std::string& what, double measured_sup)
      : Error(what), measured_sup(measured_sup) {}
  double measured_sup;
};

} // namespace ips
