#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bai {

/// Stable error codes. The CLI prints these names verbatim on stderr.
enum class ErrorCode {
    InvalidArgument,
    InvalidInstance,
    DuplicateBestArm,
    IndexOutOfRange,
    EmptyGroup,
    InvalidK,
    DecodedDummyArm,
    BudgetTooSmall,
    SeparabilityViolated,
    DegenerateInterval,
    SupportViolation,
    EmptySubset,
    CsvFormatError,
    ConfigParse,
    IoFailure,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidInstance: return "InvalidInstance";
        case ErrorCode::DuplicateBestArm: return "DuplicateBestArm";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::EmptyGroup: return "EmptyGroup";
        case ErrorCode::InvalidK: return "InvalidK";
        case ErrorCode::DecodedDummyArm: return "DecodedDummyArm";
        case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
        case ErrorCode::SeparabilityViolated: return "SeparabilityViolated";
        case ErrorCode::DegenerateInterval: return "DegenerateInterval";
        case ErrorCode::SupportViolation: return "SupportViolation";
        case ErrorCode::EmptySubset: return "EmptySubset";
        case ErrorCode::CsvFormatError: return "CsvFormatError";
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace bai
