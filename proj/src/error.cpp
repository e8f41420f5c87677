#include "neodeform/error.hpp"

namespace neodeform {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::NonPositiveAtrophy: return "NonPositiveAtrophy";
        case ErrorCode::SingularGrowth: return "SingularGrowth";
        case ErrorCode::InvertedElement: return "InvertedElement";
        case ErrorCode::SingularElastic: return "SingularElastic";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::BadHeader: return "BadHeader";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace neodeform
