#pragma once

#include <stdexcept>
#include <string>

namespace icp {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values, dimension mismatches, out-of-range arguments.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// exp(mu) + beta collapsed to zero, the normalized score is undefined.
class DegenerateNormalizerError : public Error {
public:
    using Error::Error;
};

/// Calibration built from an empty score sequence.
class EmptyCalibrationError : public Error {
public:
    using Error::Error;
};

/// The requested confidence needs a larger calibration set (rank would be 0,
/// i.e. the interval would be unbounded).
class InsufficientCalibrationError : public Error {
public:
    using Error::Error;
};

/// Significance so large that the rank exceeds the calibration size.
class DegenerateConfidenceError : public Error {
public:
    using Error::Error;
};

/// Bad proper-training/calibration partition request.
class InvalidSplitError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (CSV, index list, ...); message carries location.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Every training restart produced a non-finite loss.
class TrainingDivergedError : public Error {
public:
    using Error::Error;
};

/// Stored model bundle has the wrong version, shape or schema.
class ArtifactError : public Error {
public:
    using Error::Error;
};

}  // namespace icp
