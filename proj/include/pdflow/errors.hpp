#pragma once

#include <stdexcept>
#include <string>

namespace pdflow {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PDFLOW_ERROR_TYPE(Name) \
  class Name : public Error {   \
   public:                      \
    using Error::Error;         \
  }

PDFLOW_ERROR_TYPE(DimensionMismatch);
PDFLOW_ERROR_TYPE(NotPsd);
PDFLOW_ERROR_TYPE(InfeasibleConstraints);
PDFLOW_ERROR_TYPE(KktInconsistent);
PDFLOW_ERROR_TYPE(NonpositiveTime);
PDFLOW_ERROR_TYPE(NewtonDivergence);
PDFLOW_ERROR_TYPE(TimeMismatch);
PDFLOW_ERROR_TYPE(BadSpan);
PDFLOW_ERROR_TYPE(InsufficientSamples);
PDFLOW_ERROR_TYPE(NonPositiveValues);
PDFLOW_ERROR_TYPE(OutOfTheory);
PDFLOW_ERROR_TYPE(ExponentOverflow);
PDFLOW_ERROR_TYPE(NothingToPlot);
PDFLOW_ERROR_TYPE(ConfigInvalid);

#undef PDFLOW_ERROR_TYPE

// Integration failures remember the last time at which the solution was
// still valid so callers can report where a run died.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double t) : Error(what), at_time(t) {}
  double at_time;
};

class StepUnderflow : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

class MaxStepsExceeded : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

class NonFiniteState : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

}  // namespace pdflow
