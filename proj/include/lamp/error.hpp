#pragma once

#include <stdexcept>
#include <string>

namespace lamp {

enum class ErrorCode {
    // I/O and data format
    NotFound,
    UnsupportedFormat,
    CorruptData,
    IoError,
    ParseError,
    MissingLabelInfo,
    VersionMismatch,
    DigestMismatch,
    // domain preconditions
    OutOfBounds,
    EmptySamples,
    NonPsdInput,
    WindowTooLarge,
    ZeroStride,
    EmptySet,
    EmptyBlob,
    NoFeasibleSet,
    TooManyCombinations,
    ShapeMismatch,
    MissingStage1Checkpoint,
    NumericError,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace lamp
