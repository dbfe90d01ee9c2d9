#pragma once

#include <stdexcept>
#include <string>

namespace mdbins {

/// Invalid configuration, plan, or parameter set.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A potential exponent left the representable double range.
class potential_overflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// A simulated outcome that the exact distribution gives probability zero.
class forbidden_outcome : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable plan or unwritable output.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdbins
