#include "adlab/errors.hpp"

namespace adlab {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NotHermitian: return "NotHermitian";
        case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
        case ErrorCode::PropagationFailed: return "PropagationFailed";
        case ErrorCode::RegimeViolation: return "RegimeViolation";
        case ErrorCode::InsufficientSamples: return "InsufficientSamples";
        case ErrorCode::ContinuityLost: return "ContinuityLost";
        case ErrorCode::MissingDerivative: return "MissingDerivative";
        case ErrorCode::GapTooSmall: return "GapTooSmall";
        case ErrorCode::StepTooCoarse: return "StepTooCoarse";
        case ErrorCode::NonUnitaryDrift: return "NonUnitaryDrift";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::DivisionGuard: return "DivisionGuard";
        case ErrorCode::PhaseUnwrapFailed: return "PhaseUnwrapFailed";
        case ErrorCode::TIndependenceViolated: return "TIndependenceViolated";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

bool is_input_error(ErrorCode code) noexcept {
    return code == ErrorCode::InvalidArgument || code == ErrorCode::ParseError ||
           code == ErrorCode::IoError;
}

}  // namespace adlab
