#pragma once

#include <stdexcept>
#include <string>

namespace strae {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, trees, task rows).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's precondition (shape, range, arity).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A forward value or gradient became NaN/Inf.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace strae
