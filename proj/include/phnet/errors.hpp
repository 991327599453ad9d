#pragma once

#include <stdexcept>
#include <string>

namespace phnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The network violates a structural assumption (missing capacitor, undefined endpoint, ...).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A derivative or state component became NaN or infinite.
class NonFinite : public Error {
public:
    using Error::Error;
};

/// The adaptive integrator could not meet its tolerance at the minimum step.
class StepFailure : public Error {
public:
    using Error::Error;
};

/// A time series is too short or not sampled the way an analysis needs.
class GridError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// The conservative field vanishes, so the horizontal projection is undefined.
class DegenerateDirection : public Error {
public:
    using Error::Error;
};

/// Malformed network, scenario, sweep or trajectory file.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace phnet
