#pragma once

#include <stdexcept>
#include <string>

namespace glm_bandit {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or arguments; maps to CLI exit code 1.
class InvalidConfig : public Error {
  public:
    using Error::Error;
};

/// Unreadable input or unwritable output; maps to CLI exit code 2.
class IoError : public Error {
  public:
    using Error::Error;
};

/// Base for numerical failures; maps to CLI exit code 3.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// The design matrix is numerically singular where an inverse is required.
class SingularDesign : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

/// The Newton step matrix stayed singular after the ridge fallback.
class SingularFisher : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class NonPositiveDefinite : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

}  // namespace glm_bandit
