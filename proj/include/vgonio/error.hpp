#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vgonio {

/// Failure categories shared by every module. The service and CLI report
/// these names verbatim as reason codes.
enum class ErrorCode {
    NonFinite,
    DegeneratePatch,
    DegenerateProjection,
    TooFewPoints,
    ParseError,
    EmptyMesh,
    UnsupportedFormat,
    DegenerateGeometry,
    TooFewVertices,
    IoError,
    PatchTooSmall,
    SeedOutOfRange,
    SnapTooFar,
    InvalidParams,
    DegenerateFrame,
    SideTooSmall,
    InvalidSpec,
    SessionClosed,
    OutOfRange,
    EmptySet,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace vgonio
