#pragma once

#include <stdexcept>
#include <string>

namespace lddmd {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or degenerate input (odd latent dim, constant column, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A function was evaluated outside its domain (ln of a non-positive number, division by zero).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An object was used in the wrong state, e.g. backward on a stale tape.
class StateError : public Error {
public:
    using Error::Error;
};

/// File could not be read or parsed (CSV, config, checkpoint).
class LoadError : public Error {
public:
    using Error::Error;
};

/// Checkpoint bytes are truncated or fail the checksum.
class CorruptCheckpoint : public LoadError {
public:
    using LoadError::LoadError;
};

/// Checkpoint was written by an incompatible format version.
class VersionMismatch : public LoadError {
public:
    using LoadError::LoadError;
};

/// Training produced a non-finite loss or gradient.
class NumericalAbort : public Error {
public:
    using Error::Error;
};

}  // namespace lddmd
