#include "seasonal/error.hpp"

namespace seasonal {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::BadTimestamp: return "BadTimestamp";
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::WindowMismatch: return "WindowMismatch";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::InvalidAnchor: return "InvalidAnchor";
    case ErrorCode::EmptyKeyword: return "EmptyKeyword";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveDiagonal: return "NonPositiveDiagonal";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::TooFewPositives: return "TooFewPositives";
    case ErrorCode::TooFewNegatives: return "TooFewNegatives";
    case ErrorCode::OneClassOnly: return "OneClassOnly";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

} // namespace seasonal
