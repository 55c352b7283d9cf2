#pragma once

#include <stdexcept>
#include <string>

namespace jsqdiff {

// Invalid parameters or configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite state, quadrature failure, degenerate formula.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too few cycles / points / samples for the requested estimate.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jsqdiff
