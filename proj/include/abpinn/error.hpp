#pragma once

#include <stdexcept>
#include <string>

namespace abpinn {

/// Base class for every error raised by the library. The C API maps each
/// subclass onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated (dimension mismatch, point outside
/// the domain, non-scalar loss, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// The request is well formed but outside what the library supports
/// (derivative order above 3, mixed partials, periodicity on a
/// non-periodic model).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A computation graph could not be built (unknown primitive, operands taken
/// from different tapes).
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Required state is missing, e.g. a spectral reference grid was never
/// loaded.
class StateError : public Error {
 public:
  using Error::Error;
};

/// A numerical failure detected at run time (non-finite loss, unstable
/// time stepping).
class DiagnosticError : public Error {
 public:
  using Error::Error;
};

/// Configuration file problems. The message always names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace abpinn
