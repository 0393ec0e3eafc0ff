#pragma once

#include <stdexcept>
#include <string>

namespace oja {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- profile / parsing ---

class MissingFieldError : public Error {
public:
    explicit MissingFieldError(const std::string& field)
        : Error("schema profile is missing mandatory field mapping: " + field), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class BadVerdictMapError : public Error {
public:
    explicit BadVerdictMapError(const std::string& what_text) : Error(what_text) {}
};

class StreamError : public Error {
public:
    using Error::Error;
};

// --- statistics ---

class TooFewPointsError : public Error {
public:
    using Error::Error;
};

class DegenerateXError : public Error {
public:
    using Error::Error;
};

class ConstantInputError : public Error {
public:
    using Error::Error;
};

class LengthMismatchError : public Error {
public:
    using Error::Error;
};

class SampleTooSmallError : public Error {
public:
    using Error::Error;
};

class ZeroVarianceError : public Error {
public:
    using Error::Error;
};

class ZeroBaselineError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

// --- models ---

class UnknownUserError : public Error {
public:
    explicit UnknownUserError(const std::string& user_id)
        : Error("unknown user: " + user_id) {}
};

class TooFewPositiveError : public Error {
public:
    using Error::Error;
};

// --- simulate / app ---

class ConfigInvalidError : public Error {
public:
    using Error::Error;
};

class OutputUnwritableError : public Error {
public:
    using Error::Error;
};

class EmptySeriesError : public Error {
public:
    using Error::Error;
};

} // namespace oja
