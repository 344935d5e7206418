#pragma once

#include <stdexcept>
#include <string>

namespace exgcp {

// Bad user input or a violated precondition. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; the message carries the 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Factorization failures, non-finite values, negative conditional variances.
// CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The thinned-point sampler exceeded its proposal budget. CLI exit code 4.
class RunawayThinningError : public std::runtime_error {
 public:
  RunawayThinningError(const std::string& what, std::size_t slice, double acceptance_rate)
      : std::runtime_error(what), slice_(slice), acceptance_rate_(acceptance_rate) {}
  std::size_t slice() const noexcept { return slice_; }
  double acceptance_rate() const noexcept { return acceptance_rate_; }

 private:
  std::size_t slice_;
  double acceptance_rate_;
};

}  // namespace exgcp
