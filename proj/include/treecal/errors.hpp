#pragma once

#include <stdexcept>
#include <string>

namespace treecal {

/// Invalid run or algorithm parameters. The message names the violated constraint.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A sequential protocol was driven out of order, or a component broke its contract.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The requested (domain, norm, regularizer) combination has no implementation.
class UnsupportedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace treecal
