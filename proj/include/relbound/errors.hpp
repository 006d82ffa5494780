#pragma once

#include <stdexcept>
#include <string>

namespace relbound {

/// Caller passed arguments that violate an operation's contract
/// (rank mismatch, depth too small, malformed word text, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A measure expression could not be evaluated (e.g. conditioning on a null set).
class EvaluationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A checked precondition of a verification failed, such as a base action
/// that does not satisfy the group law.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace relbound
