#pragma once

#include <stdexcept>
#include <string>

namespace uaamg {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad weights, inconsistent sizes, invalid configuration.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// File access and parse failures.
class IoError : public Error {
public:
  using Error::Error;
};

/// Numerical failure: breakdown, singular factorization, stagnating setup.
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace uaamg
