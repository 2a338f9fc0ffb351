#pragma once

#include <stdexcept>
#include <string>

namespace ppgopt {

enum class ErrorKind {
    InsufficientData,
    InvalidBand,
    NyquistViolation,
    DesignFailure,
    InvalidFrequency,
    NoBeatsDetected,
    EmptyInput,
    UndefinedMetric,
    InvalidInput,
    Infeasible,
    DegenerateVariance,
    ParseError,
    ValidationError,
    IoError,
};

inline const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::InvalidBand: return "InvalidBand";
    case ErrorKind::NyquistViolation: return "NyquistViolation";
    case ErrorKind::DesignFailure: return "DesignFailure";
    case ErrorKind::InvalidFrequency: return "InvalidFrequency";
    case ErrorKind::NoBeatsDetected: return "NoBeatsDetected";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::UndefinedMetric: return "UndefinedMetric";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

    // Caller-side input problems, as opposed to numerics/runtime failures.
    [[nodiscard]] bool is_validation() const noexcept
    {
        switch (kind_) {
        case ErrorKind::InvalidBand:
        case ErrorKind::NyquistViolation:
        case ErrorKind::InvalidFrequency:
        case ErrorKind::InvalidInput:
        case ErrorKind::ParseError:
        case ErrorKind::ValidationError:
        case ErrorKind::EmptyInput:
            return true;
        default:
            return false;
        }
    }

private:
    ErrorKind kind_;
};

} // namespace ppgopt
