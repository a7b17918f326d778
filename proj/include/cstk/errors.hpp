#pragma once

#include <stdexcept>
#include <string>

namespace cstk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Porous-medium flux evaluated on a density with entries below -tolerance.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class NotSolenoidal : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// A step would break a state invariant; the driver retries with dt/2.
class StepRejected : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace cstk
