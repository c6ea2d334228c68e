#pragma once

#include <stdexcept>
#include <string>

namespace qcorr {

/// Base class of all qcorr exceptions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter is outside the mathematical domain of an operation
/// (e.g. |r| >= 1, sigma2 <= 0, gamma = 0 where friction is required).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input matrix is asymmetric beyond tolerance. Warning-grade: small
/// asymmetry is silently symmetrized, large asymmetry raises this.
class NotSymmetricError : public Error {
public:
    using Error::Error;
};

/// Input matrix is not positive definite at the requested tolerance.
class NotPositiveDefiniteError : public Error {
public:
    using Error::Error;
};

/// A scenario or sweep document failed to parse (malformed syntax).
class ParseError : public Error {
public:
    using Error::Error;
};

/// A scenario parsed but violates a semantic rule (regime requirements,
/// grid shape, unknown output names, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Base of integration failures; carries the time of the failure.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double t) : Error(what), t_(t) {}
    double time() const noexcept { return t_; }

private:
    double t_;
};

/// The adaptive controller drove the step below the minimum allowed size.
class StepSizeUnderflowError : public SolverError {
public:
    using SolverError::SolverError;
};

/// The covariance matrix lost positive definiteness at an accepted step.
class SpdLostError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Inversion of the covariance matrix failed inside a right-hand side.
class SingularSigmaError : public SolverError {
public:
    using SolverError::SolverError;
};

} // namespace qcorr
