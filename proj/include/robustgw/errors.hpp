#pragma once

#include <stdexcept>
#include <string>

namespace robustgw {

/// Malformed input: bad weights, shape mismatch, out-of-range parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver could not produce a finite answer (kernel underflow, iteration cap, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace robustgw
