#pragma once

#include <stdexcept>
#include <string>

namespace relact {

// Base of every error the library raises. The CLI maps each subclass to an
// exit code (validation problems exit 1, usage problems exit 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input document is syntactically malformed or has the wrong shape.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input is well formed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition (mismatched lengths, ids, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Action model or threshold configuration is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace relact
