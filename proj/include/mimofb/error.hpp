#pragma once

#include <stdexcept>
#include <string>

namespace mimofb {

enum class ErrorCode {
    ShapeMismatch = 1,
    NotHermitian,
    Indefinite,
    NoConvergence,
    RankDeficientPilots,
    NumericalSingularity,
    EmptyTrainingSet,
    DegenerateOutput,
    TableTooLarge,
    NonFiniteLoss,
    ConfigError,
    MissingArtifact,
    CorruptArtifact,
    InvalidArgument,
    BoundViolation,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C API and the CLI can map it to a stable status without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace mimofb
