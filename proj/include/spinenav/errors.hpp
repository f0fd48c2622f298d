#pragma once

#include <stdexcept>
#include <string>

namespace spinenav {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

/// Input was rejected: bad geometry, bad parameters, malformed files.
/// The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "ValidationError"; }
};

#define SPINENAV_DEFINE_ERROR(Name)                                    \
  class Name : public ValidationError {                                \
   public:                                                             \
    using ValidationError::ValidationError;                            \
    const char* kind() const noexcept override { return #Name; }       \
  };

SPINENAV_DEFINE_ERROR(TooFewSamples)
SPINENAV_DEFINE_ERROR(InsufficientMotion)
SPINENAV_DEFINE_ERROR(DegenerateGeometry)
SPINENAV_DEFINE_ERROR(CollinearPoints)
SPINENAV_DEFINE_ERROR(InvalidParameter)
SPINENAV_DEFINE_ERROR(MissingCalibration)
SPINENAV_DEFINE_ERROR(IllegalTransition)
SPINENAV_DEFINE_ERROR(EmptyInput)
SPINENAV_DEFINE_ERROR(FormatError)

#undef SPINENAV_DEFINE_ERROR

}  // namespace spinenav
