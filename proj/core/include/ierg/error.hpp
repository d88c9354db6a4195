#pragma once

#include <stdexcept>
#include <string>

namespace ierg {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: wrong dimensions, values outside a documented domain,
/// configuration invariants violated.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An exact computation was requested beyond the enumeration bound.
class EnumerationLimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace ierg
