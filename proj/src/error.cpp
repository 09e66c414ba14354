#include "mimofb/error.hpp"

namespace mimofb {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::Indefinite: return "Indefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::RankDeficientPilots: return "RankDeficientPilots";
    case ErrorCode::NumericalSingularity: return "NumericalSingularity";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::DegenerateOutput: return "DegenerateOutput";
    case ErrorCode::TableTooLarge: return "TableTooLarge";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::CorruptArtifact: return "CorruptArtifact";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BoundViolation: return "BoundViolation";
    }
    return "Unknown";
}

} // namespace mimofb
