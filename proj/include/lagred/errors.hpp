#pragma once
#include <stdexcept>
#include <string>

namespace lagred {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    std::size_t position;
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
};

struct UnknownVariable : Error {
    using Error::Error;
};
struct UnboundVariable : Error {
    using Error::Error;
};
struct EvaluationDomainError : Error {
    using Error::Error;
};
struct ChartMismatch : Error {
    using Error::Error;
};
struct SingularHessian : Error {
    using Error::Error;
};
struct LinearSolveFailure : Error {
    using Error::Error;
};
struct SymmetryRequired : Error {
    using Error::Error;
};
struct UnsupportedConnection : Error {
    using Error::Error;
};
struct NonInvertibleVelocityMap : Error {
    using Error::Error;
};
struct StepLimitExceeded : Error {
    using Error::Error;
};
struct IllConditionedHessian : Error {
    using Error::Error;
};
struct SpanMismatch : Error {
    using Error::Error;
};
struct InputError : Error {
    using Error::Error;
};

} // namespace lagred
