#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace proxmh {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input vector length does not match the target or oracle dimension.
class DimensionError : public Error {
public:
    DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
        : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
                std::to_string(actual)),
          expected_(expected), actual_(actual) {}

    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

/// A caller broke a documented precondition (bad parameter, empty input, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// The regularizer variant does not provide the requested capability.
class UnsupportedOperationError : public Error {
public:
    using Error::Error;
};

/// Base for failures of the numerical machinery itself.
class NumericError : public Error {
public:
    using Error::Error;
};

class NonFinitePotentialError : public NumericError {
public:
    explicit NonFinitePotentialError(double value)
        : NumericError("potential evaluated to a non-finite value (" + std::to_string(value) + ")"),
          value_(value) {}

    double value() const noexcept { return value_; }

private:
    double value_;
};

/// A rejection sampler exhausted its attempt budget.
class OracleFailureError : public NumericError {
public:
    OracleFailureError(const std::string& where, std::uint64_t attempts)
        : NumericError(where + ": rejection sampler gave up after " + std::to_string(attempts) +
                       " attempts"),
          attempts_(attempts) {}

    std::uint64_t attempts() const noexcept { return attempts_; }

private:
    std::uint64_t attempts_;
};

class QuadratureError : public NumericError {
public:
    QuadratureError(const std::string& what, double best_estimate, double achieved_tol)
        : NumericError(what + " (best log-estimate " + std::to_string(best_estimate) +
                       ", achieved relative tolerance " + std::to_string(achieved_tol) + ")"),
          best_estimate_(best_estimate), achieved_tol_(achieved_tol) {}

    double best_estimate() const noexcept { return best_estimate_; }
    double achieved_tol() const noexcept { return achieved_tol_; }

private:
    double best_estimate_;
    double achieved_tol_;
};

/// The envelope sampler found the log-density above one of its chord bounds.
class NotLogConcaveError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateSeriesError : public NumericError {
public:
    using NumericError::NumericError;
};

/// A ground-truth grid does not cover the tail ball of the target.
class RangeCoverageError : public Error {
public:
    RangeCoverageError(const std::string& what, double required_radius)
        : Error(what + " (required half-width " + std::to_string(required_radius) + ")"),
          required_radius_(required_radius) {}

    double required_radius() const noexcept { return required_radius_; }

private:
    double required_radius_;
};

/// Numerical failure inside a chain transition, tagged with the step index.
class StepFailure : public NumericError {
public:
    StepFailure(const std::string& cause, std::uint64_t step_index)
        : NumericError("step " + std::to_string(step_index) + ": " + cause),
          step_index_(step_index) {}

    std::uint64_t step_index() const noexcept { return step_index_; }

private:
    std::uint64_t step_index_;
};

}  // namespace proxmh
