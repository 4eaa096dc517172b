#pragma once

#include <stdexcept>
#include <string>

namespace confdi {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Errors raised by configuration / input validation.
struct InvalidInput : Error {
  using Error::Error;
};

struct TrivialPartition : Error {
  using Error::Error;
};

struct NotAlmostEquitable : Error {
  using Error::Error;
};

struct KappaOutOfRange : Error {
  using Error::Error;
};

struct NotStronglyConnected : Error {
  using Error::Error;
};

struct NoSuchArc : Error {
  using Error::Error;
};

struct AsymmetricWeights : Error {
  using Error::Error;
};

struct ScheduleInvalid : Error {
  using Error::Error;
};

struct ConvergenceFailure : Error {
  using Error::Error;
};

struct NotIrreducible : Error {
  using Error::Error;
};

struct RepeatedEigenvalue : Error {
  using Error::Error;
};

struct FaultDisconnectsGraph : Error {
  using Error::Error;
};

struct AssumptionViolated : Error {
  using Error::Error;
};

struct NotObservable : Error {
  using Error::Error;
};

struct NoDirectionMatch : Error {
  using Error::Error;
};

struct EmptyCandidateSet : Error {
  using Error::Error;
};

struct WindowTooShort : Error {
  using Error::Error;
};

struct IllConditionedTransform : Error {
  using Error::Error;
};

}  // namespace confdi
