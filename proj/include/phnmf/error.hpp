#pragma once

#include <stdexcept>
#include <string>

namespace phnmf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (wrong size, bad CSV, unknown config key).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Argument outside the range an operation accepts.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Input data outside the mathematical domain (e.g. negative NMF entries).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Two inputs that must agree (sample ids, offsets, lengths) do not.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Operation requested on an essential (never dying) pair.
class UnsupportedPairError : public Error {
public:
    using Error::Error;
};

/// No finite pairs / no mass to work with.
class EmptyFeatureError : public Error {
public:
    using Error::Error;
};

/// Requested item is not present (pair not in diagram, sample id unknown).
class LookupError : public Error {
public:
    using Error::Error;
};

/// Wraps an error raised inside a pipeline stage with the stage name and sample.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace phnmf
