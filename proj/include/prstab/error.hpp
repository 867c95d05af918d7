#pragma once

#include <stdexcept>
#include <string>

namespace prstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, bad file contents, violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An exact enumeration would exceed the configured subset budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Iteration caps hit, singular systems, or two computation routes that disagree.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace prstab
