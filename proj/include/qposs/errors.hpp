#pragma once

#include <stdexcept>
#include <string>

namespace qposs {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scale labels outside [0,1] or too many levels.
class InvalidScaleError : public Error {
public:
    using Error::Error;
};

/// Mismatched sequence lengths or table sizes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A model violates a well-formedness rule (normalization, stay action, ...).
class ModelError : public Error {
public:
    using Error::Error;
};

/// A solver was called on a model that does not meet its hypothesis.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// An internal bound was exceeded; signals a bug or a malformed model.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// The observed symbol has possibility 0 under the predicted belief.
class ImpossibleObservationError : public Error {
public:
    using Error::Error;
};

/// An enumeration would exceed its configured cap.
class TooLargeError : public Error {
public:
    using Error::Error;
};

/// Iterative numeric solver ran out of iterations.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Malformed model file text; the message carries line and column.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A model file uses a label that is not a member of its declared scale.
class UnknownLabelError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace qposs
