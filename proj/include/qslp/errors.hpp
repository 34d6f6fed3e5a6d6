#pragma once

#include <stdexcept>
#include <string>

namespace qslp {

// Bad user input: a violated invariant, unknown key, malformed value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Estimator has no usable statistics (empty window, zero denominator).
class DegenerateStatisticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qslp
