#ifndef RAIE_ERROR_HPP
#define RAIE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace raie {

enum class ErrorCode {
    EmptyInput,
    KTooLarge,
    DimensionMismatch,
    EmptyMembers,
    EmptyRegionSet,
    InvalidDistribution,
    DegenerateCenter,
    CorruptSnapshot,
    EmptyHistory,
    EmptyWindow,
    ZeroHidden,
    FrozenViolation,
    AlreadyFrozen,
    EmptyRegionData,
    KExceedsVocab,
    UnreadableInput,
    UnknownFormat,
    EmptyEvents,
    InvalidScenario,
    LengthMismatch,
    MissingBaseline,
    IdMismatch,
    InvalidConfig,
    InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyMembers: return "EmptyMembers";
    case ErrorCode::EmptyRegionSet: return "EmptyRegionSet";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::DegenerateCenter: return "DegenerateCenter";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::ZeroHidden: return "ZeroHidden";
    case ErrorCode::FrozenViolation: return "FrozenViolation";
    case ErrorCode::AlreadyFrozen: return "AlreadyFrozen";
    case ErrorCode::EmptyRegionData: return "EmptyRegionData";
    case ErrorCode::KExceedsVocab: return "KExceedsVocab";
    case ErrorCode::UnreadableInput: return "UnreadableInput";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::EmptyEvents: return "EmptyEvents";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingBaseline: return "MissingBaseline";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace raie

#endif  // RAIE_ERROR_HPP
