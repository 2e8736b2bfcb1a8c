#include "ddss/error.hpp"

namespace ddss {

const char* kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Dimension: return "DimensionError";
        case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorKind::NotNegativeDefinite: return "NotNegativeDefinite";
        case ErrorKind::Domain: return "DomainError";
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::InvalidDelayBounds: return "InvalidDelayBounds";
        case ErrorKind::NonPositiveGamma: return "NonPositiveGamma";
        case ErrorKind::AffineViolation: return "AffineViolation";
        case ErrorKind::Infeasible: return "Infeasible";
        case ErrorKind::SolverFailure: return "SolverError";
        case ErrorKind::SingularX: return "SingularX";
        case ErrorKind::InitializationFailed: return "InitializationFailed";
        case ErrorKind::IterationInfeasible: return "IterationInfeasible";
        case ErrorKind::NonFiniteState: return "NonFiniteState";
        case ErrorKind::DelayOutOfBounds: return "DelayOutOfBounds";
        case ErrorKind::NonConvergent: return "NonConvergent";
        case ErrorKind::Input: return "InputError";
    }
    return "Error";
}

}  // namespace ddss
