#pragma once

#include <stdexcept>
#include <string>

namespace perfest {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual input (CSV, formula, JSON).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A plugin returned something that breaks the documented result contract.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Result objects that cannot be combined (seed, method, version mismatch).
class Incompatible : public Error {
 public:
  using Error::Error;
};

}  // namespace perfest
