#pragma once

#include <stdexcept>
#include <string>

namespace fliga {

/// Base class of all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluation point outside the basis or parametric domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid knot vector, grid shape, duplicate constraint, or benchmark configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Floating map lost strict monotonicity (non-positive Jacobian or
/// inadmissible regulation column).
class DegenerateMapError : public Error {
public:
    using Error::Error;
};

/// Newton/bisection root search failed to reach tolerance.
class InversionError : public Error {
public:
    explicit InversionError(const std::string& msg, int point_id = -1)
        : Error(msg), point_id(point_id) {}
    int point_id;   // offending material point, -1 if not point-bound
};

/// Geometry map Jacobian determinant not positive: mesh tangling.
class TanglingError : public Error {
public:
    using Error::Error;
};

/// Material point advection produced a non-positive volume change.
class StepTooLargeError : public Error {
public:
    using Error::Error;
};

/// Global Newton-Raphson did not converge within the iteration budget.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& msg, double residual_norm)
        : Error(msg), residual_norm(residual_norm) {}
    double residual_norm;
};

} // namespace fliga
