#pragma once

#include <stdexcept>
#include <string>

namespace objprior {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Score evaluated at a point where it is not defined (e.g. q' = 0).
class SingularityError : public DomainError {
public:
    using DomainError::DomainError;
};

// Quantile requested at 0 or 1.
class BoundaryError : public DomainError {
public:
    using DomainError::DomainError;
};

// Grids with mismatched abscissae or missing derivative arrays.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Grid too short for the requested finite-difference stencil.
class StencilError : public ShapeError {
public:
    using ShapeError::ShapeError;
};

class ResolutionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller broke a documented precondition (empty input, improper prior used as a density, ...).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InitializationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite deviance or similar numerical breakdown during evaluation.
class DiagnosticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace objprior
