#pragma once

#include <stdexcept>
#include <string>

namespace sabon {

// Numerical failures derive from NumericalError so the CLI can map them to a
// single exit code; configuration problems use ConfigError.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class GridMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ZeroDenominator : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonFinite : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateBasis : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SolverFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonUniformGrid : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IllConditionedGram : public NumericalError {
public:
    IllConditionedGram(const std::string& what, double condition)
        : NumericalError(what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

class PowerIterationStall : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace sabon
