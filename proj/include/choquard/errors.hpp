#pragma once

#include <stdexcept>
#include <string>

namespace choquard {

/// Failure categories surfaced by the solver. The names double as the
/// machine-readable codes written into result summaries.
enum class Errc {
    NonIncreasingRadii,
    NonFiniteRadius,
    TruncationTooSmall,
    GridMismatch,
    ExponentOutOfRange,
    SingularSolve,
    DegenerateData,
    HomotopyStalled,
    NewtonDiverged,
    CertificationFailed,
    MaxIterationsExceeded,
    ComponentCollapsed,
    SearchFailed,
    DeltaTooLarge,
    ZeroField,
    ConfigError,
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::NonIncreasingRadii:    return "NonIncreasingRadii";
    case Errc::NonFiniteRadius:       return "NonFiniteRadius";
    case Errc::TruncationTooSmall:    return "TruncationTooSmall";
    case Errc::GridMismatch:          return "GridMismatch";
    case Errc::ExponentOutOfRange:    return "ExponentOutOfRange";
    case Errc::SingularSolve:         return "SingularSolve";
    case Errc::DegenerateData:        return "DegenerateData";
    case Errc::HomotopyStalled:       return "HomotopyStalled";
    case Errc::NewtonDiverged:        return "NewtonDiverged";
    case Errc::CertificationFailed:   return "CertificationFailed";
    case Errc::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case Errc::ComponentCollapsed:    return "ComponentCollapsed";
    case Errc::SearchFailed:          return "SearchFailed";
    case Errc::DeltaTooLarge:         return "DeltaTooLarge";
    case Errc::ZeroField:             return "ZeroField";
    case Errc::ConfigError:           return "ConfigError";
    }
    return "Unknown";
}

class SolverError : public std::runtime_error {
public:
    SolverError(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

} // namespace choquard
