#pragma once

#include <stdexcept>
#include <string>

namespace miab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};

// Carries the offending configuration key.
struct ValidationError : Error {
  ValidationError(std::string key, const std::string& what) : Error(key + ": " + what), key(std::move(key)) {}
  std::string key;
};

struct GeometryError : Error {
  using Error::Error;
};
struct RangeError : Error {
  using Error::Error;
};
struct UnsupportedPair : Error {
  using Error::Error;
};
struct ConstraintViolation : Error {
  using Error::Error;
};
struct NoCandidate : Error {
  using Error::Error;
};
struct DoubleDelivery : Error {
  using Error::Error;
};
struct IncompatibleRuns : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace miab
