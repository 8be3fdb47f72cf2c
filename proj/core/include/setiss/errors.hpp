#pragma once

#include <stdexcept>
#include <string>

namespace setiss {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// gains
struct DomainError : Error { using Error::Error; };
struct NonInvertible : Error { using Error::Error; };
struct NotStrictlyIncreasing : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct DomainMismatch : Error { using Error::Error; };
struct EmptyInterval : Error { using Error::Error; };
struct NotSerializable : Error { using Error::Error; };

// sets
struct DimensionMismatch : Error { using Error::Error; };
struct NoParametrization : Error { using Error::Error; };
struct EmptyWindow : Error { using Error::Error; };
struct HorizonTooShort : Error { using Error::Error; };

// dde
struct BadStep : Error { using Error::Error; };
struct OutOfSpan : Error { using Error::Error; };

// razumikhin / systems
struct BadL : Error { using Error::Error; };
struct EnvelopeFitFailed : Error { using Error::Error; };

// cli
struct ConfigError : Error { using Error::Error; };

}  // namespace setiss
