#pragma once

#include <stdexcept>
#include <string>

namespace vrg {

/// Shape or dimension disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain an operation is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed textual input (relation strings, config, text formats).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary or text file that fails validation on load.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training or inference hit a state it cannot continue from (non-finite loss etc).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vrg
