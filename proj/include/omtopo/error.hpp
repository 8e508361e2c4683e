#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace omtopo {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A LatticeSpec (or something derived from it) is malformed.
class SpecError : public Error {
public:
    SpecError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)), reason_(what) {}

    const std::string& field() const noexcept { return field_; }
    /// Message without the field prefix.
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string field_;
    std::string reason_;
};

class DimensionMismatch : public SpecError {
public:
    using SpecError::SpecError;
};

class InvalidParameter : public SpecError {
public:
    using SpecError::SpecError;
};

/// Bad input to a numerical routine (non-Hermitian matrix, unnormalized vector, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A solver did not produce a result. Maps to CLI exit code 1.
class SolverError : public Error {
public:
    using Error::Error;
};

class NonConvergence : public SolverError {
public:
    NonConvergence(const std::string& what, double best_residual)
        : SolverError(what), best_residual_(best_residual) {}

    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

class Divergence : public SolverError {
public:
    using SolverError::SolverError;
};

/// Malformed configuration file or override. Maps to CLI exit code 2.
class ConfigError : public Error {
public:
    ConfigError(std::string key_path, const std::string& what)
        : Error(key_path.empty() ? what : key_path + ": " + what), key_path_(std::move(key_path)) {}

    const std::string& key_path() const noexcept { return key_path_; }

private:
    std::string key_path_;
};

} // namespace omtopo
