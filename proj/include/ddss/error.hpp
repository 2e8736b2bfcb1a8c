#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ddss {

enum class ErrorKind {
    Dimension,
    NotPositiveDefinite,
    NotNegativeDefinite,
    Domain,
    Parse,
    InvalidDelayBounds,
    NonPositiveGamma,
    AffineViolation,
    Infeasible,
    SolverFailure,
    SingularX,
    InitializationFailed,
    IterationInfeasible,
    NonFiniteState,
    DelayOutOfBounds,
    NonConvergent,
    Input,
};

const char* kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Syntax error in an expression source, with the byte offset of the failure.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& what)
        : Error(ErrorKind::Parse, what), offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace ddss
