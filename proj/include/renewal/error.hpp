#pragma once

#include <stdexcept>
#include <string>

namespace renewal {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A bound was requested from parameters whose validity quantity q is >= 1.
class InvalidCertificate : public DomainError {
public:
    using DomainError::DomainError;
};

// Malformed user input (config fields, distribution parameters).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Adaptive quadrature failed to reach the requested tolerance. Distinct from
// a divergent integral, which is reported as +infinity.
class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A simulation safety cap (walk steps, coupling iterations) was hit, or the
// model violated an assumption the sampler depends on.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace renewal
