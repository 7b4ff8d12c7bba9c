#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace subdiff {

/// Argument outside the documented domain of an operation.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures that arise while computing (divergence, singular systems, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The simulated subordinator does not reach the requested real-time horizon.
class InsufficientPathError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, std::size_t step)
        : NumericalError(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class QuadratureError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OptimizerDivergedError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class RegressionRankError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class GainSingularityError : public NumericalError {
public:
    GainSingularityError(const std::string& what, double e_t)
        : NumericalError(what + " at E_t=" + std::to_string(e_t)), e_t_(e_t) {}

    double e_t() const noexcept { return e_t_; }

private:
    double e_t_;
};

}  // namespace subdiff
