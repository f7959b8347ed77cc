#pragma once

#include <stdexcept>

namespace fmqa {

/// A request exceeds a fixed table or enumeration limit.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Every point of the discrete search space has already been evaluated.
class ExhaustionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A black-box evaluator failed to produce a value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fmqa
