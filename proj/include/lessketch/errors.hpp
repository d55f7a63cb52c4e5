#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lessketch {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data could not be read or has the wrong shape. Maps to CLI exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// A numerical precondition failed at run time. Maps to CLI exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class RankDeficient : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Raised when an iterative solve hits its iteration cap. The last iterate is
/// kept so the caller can decide whether it is good enough.
class NotConverged : public NumericalError {
public:
    NotConverged(std::size_t iterations, double final_residual, std::vector<double> iterate)
        : NumericalError("conjugate gradient did not converge after " + std::to_string(iterations) +
                         " iterations (relative residual " + std::to_string(final_residual) + ")"),
          iterations_(iterations), final_residual_(final_residual), iterate_(std::move(iterate)) {}

    std::size_t iterations() const noexcept { return iterations_; }
    double final_residual() const noexcept { return final_residual_; }
    const std::vector<double>& iterate() const noexcept { return iterate_; }

private:
    std::size_t iterations_;
    double final_residual_;
    std::vector<double> iterate_;
};

/// gamma = m / (m - d) needs m > d.
class GammaUndefined : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Relative excess loss is undefined when the least-squares residual vanishes.
class ConsistentSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EmptyInput : public DataError {
public:
    using DataError::DataError;
};

class DimensionMismatch : public DataError {
public:
    using DataError::DataError;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t line, std::string reason)
        : DataError("line " + std::to_string(line) + ": " + reason), line_(line), reason_(std::move(reason)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

/// A machine opened its stream more often than the protocol declares.
class PassViolation : public Error {
public:
    using Error::Error;
};

/// A machine held more live words than the configured cap.
class SpaceCapExceeded : public Error {
public:
    using Error::Error;
};

/// A worker in a distributed run failed; wraps the first failure by machine id.
class MachineFailed : public Error {
public:
    enum class Cause { Numerical, Data, Protocol, Other };

    MachineFailed(std::size_t machine_id, Cause cause, const std::string& what)
        : Error("machine " + std::to_string(machine_id) + " failed: " + what), machine_id_(machine_id),
          cause_(cause) {}

    std::size_t machine_id() const noexcept { return machine_id_; }
    Cause cause() const noexcept { return cause_; }

private:
    std::size_t machine_id_;
    Cause cause_;
};

}  // namespace lessketch
