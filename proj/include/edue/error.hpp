#pragma once

#include <stdexcept>
#include <string>

namespace edue {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched shapes, unknown ids, empty sets where one element is required.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (e.g. demand above its cap).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed scenario or flow file. Carries a location hint for diagnostics.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace edue
