#pragma once

#include <stdexcept>

namespace pso_escape {

// Bad parameters, goal regions, windows or configuration values.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// pb == gb (zero minimum support width) or a point-mass kernel asked for a density.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A bound or chain builder used outside the regime where it holds (omega != 1).
class NotApplicableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A chain builder's origin is not in the entry set it requires.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pso_escape
