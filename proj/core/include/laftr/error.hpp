#pragma once

#include <stdexcept>
#include <string>

namespace laftr {

/// Bad caller input: out-of-range index, invalid configuration, shape mismatch.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. The message names the offending line where known.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite objective or gradient during optimization.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric that is undefined for the given input (e.g. AUC with one class).
class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace laftr
