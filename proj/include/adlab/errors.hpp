// errors.hpp - error codes shared by every adlab module
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adlab {

enum class ErrorCode {
    NotHermitian,
    DegenerateSpectrum,
    PropagationFailed,
    RegimeViolation,
    InsufficientSamples,
    ContinuityLost,
    MissingDerivative,
    GapTooSmall,
    StepTooCoarse,
    NonUnitaryDrift,
    GridMismatch,
    GridTooCoarse,
    DivisionGuard,
    PhaseUnwrapFailed,
    TIndependenceViolated,
    InvalidArgument,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Input and I/O problems map to CLI exit code 1, everything else is a
// violated physics contract (exit code 2).
bool is_input_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return to_string(code_); }

private:
    ErrorCode code_;
};

}  // namespace adlab
