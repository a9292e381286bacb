#include "vgonio/error.hpp"

namespace vgonio {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DegeneratePatch: return "DegeneratePatch";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::TooFewVertices: return "TooFewVertices";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::PatchTooSmall: return "PatchTooSmall";
    case ErrorCode::SeedOutOfRange: return "SeedOutOfRange";
    case ErrorCode::SnapTooFar: return "SnapTooFar";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DegenerateFrame: return "DegenerateFrame";
    case ErrorCode::SideTooSmall: return "SideTooSmall";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::SessionClosed: return "SessionClosed";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptySet: return "EmptySet";
    }
    return "Unknown";
}

} // namespace vgonio
