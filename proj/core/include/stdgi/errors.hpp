#pragma once

#include <stdexcept>
#include <string>

namespace stdgi {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape disagreements.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Bad configuration values (unknown keys, out-of-range hyperparameters, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Semantically invalid data (negative distances, zero variance, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// API misuse independent of data values (non-scalar loss, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Operation not legal in the current object state (double backward, ...).
class StateError : public Error {
public:
    using Error::Error;
};

// Filesystem trouble: missing files, unwritable directories.
class IoError : public Error {
public:
    using Error::Error;
};

// Malformed file contents.
class ParseError : public Error {
public:
    using Error::Error;
};

// Training diverged (NaN/Inf loss).
class NumericError : public Error {
public:
    using Error::Error;
};

// Process exit codes used by the CLI.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int io = 3;
inline constexpr int divergence = 4;
}  // namespace exit_code

}  // namespace stdgi
