#pragma once

#include <stdexcept>
#include <string>

namespace ssmlab {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Dimension, precision, or precondition disagreement between operands.
class MismatchError : public Error {
 public:
  explicit MismatchError(const std::string& what) : Error(what) {}
};

// An enumeration, counter, or thought budget would be exceeded.
class BudgetError : public Error {
 public:
  explicit BudgetError(const std::string& what) : Error(what) {}
};

// A token stream does not have the shape a machine or parser requires.
class StreamError : public Error {
 public:
  explicit StreamError(const std::string& what) : Error(what) {}
};

// Malformed config document or CLI usage.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace ssmlab
