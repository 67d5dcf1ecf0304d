#ifndef NEPPO_ERRORS_HPP
#define NEPPO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace neppo {

/// Malformed input: shape mismatches, out-of-range indices, bad parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested exact computation exceeds the dense-table limits.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A game, config or parameter file could not be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by closed-form oracles at points where the answer is a set.
/// The interval [lower, upper] is the set of admissible values.
class SetValuedError : public std::domain_error {
 public:
  SetValuedError(const std::string& what, double lower, double upper)
      : std::domain_error(what), lower_(lower), upper_(upper) {}

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  double lower_;
  double upper_;
};

}  // namespace neppo

#endif  // NEPPO_ERRORS_HPP
