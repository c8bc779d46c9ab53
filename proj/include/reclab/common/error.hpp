#pragma once

#include <stdexcept>
#include <string>

namespace reclab {

// Base class for all recoverable errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define RECLAB_DEFINE_ERROR(NAME)                                             \
  class NAME : public Error {                                                 \
  public:                                                                     \
    explicit NAME(const std::string& what) : Error(#NAME ": " + what) {}      \
  }

RECLAB_DEFINE_ERROR(MissingColumn);
RECLAB_DEFINE_ERROR(MalformedInput);
RECLAB_DEFINE_ERROR(DegenerateSplit);
RECLAB_DEFINE_ERROR(InvalidConfig);
RECLAB_DEFINE_ERROR(UnknownUser);
RECLAB_DEFINE_ERROR(OutOfOrderEvent);
RECLAB_DEFINE_ERROR(InsufficientData);
RECLAB_DEFINE_ERROR(DimensionMismatch);
RECLAB_DEFINE_ERROR(TripTooShort);
RECLAB_DEFINE_ERROR(UnknownCityId);
RECLAB_DEFINE_ERROR(AllPadInput);
RECLAB_DEFINE_ERROR(ShapeMismatch);
RECLAB_DEFINE_ERROR(InvalidTarget);
RECLAB_DEFINE_ERROR(NonSimplexInput);
RECLAB_DEFINE_ERROR(BatchSizeMismatch);
RECLAB_DEFINE_ERROR(EmptyRanking);
RECLAB_DEFINE_ERROR(LeakageGuard);
RECLAB_DEFINE_ERROR(TooFewPoints);
RECLAB_DEFINE_ERROR(ConfigError);
RECLAB_DEFINE_ERROR(HashMismatch);
RECLAB_DEFINE_ERROR(IoError);

#undef RECLAB_DEFINE_ERROR

// Row-level ingestion failure; collected (not thrown) unless the bad-row
// ratio exceeds the abort threshold.
struct MalformedRow {
  long line_no = 0;
  std::string reason;
};

}  // namespace reclab
