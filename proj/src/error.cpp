#include "rlink/error.hpp"

namespace rlink {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyString: return "EmptyString";
        case ErrorCode::NonDigitInput: return "NonDigitInput";
        case ErrorCode::CoordinateOutOfRange: return "CoordinateOutOfRange";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::NoFeasibleConfig: return "NoFeasibleConfig";
        case ErrorCode::EmptyShingleSet: return "EmptyShingleSet";
        case ErrorCode::SignatureLengthMismatch: return "SignatureLengthMismatch";
        case ErrorCode::DuplicateRecordId: return "DuplicateRecordId";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::IdOutOfRange: return "IdOutOfRange";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::MalformedGazetteerRow: return "MalformedGazetteerRow";
        case ErrorCode::EmptyQueryName: return "EmptyQueryName";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidGroundTruth: return "InvalidGroundTruth";
        case ErrorCode::InfeasibleSimilarity: return "InfeasibleSimilarity";
        case ErrorCode::ServiceUnreachable: return "ServiceUnreachable";
        case ErrorCode::MalformedRequest: return "MalformedRequest";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

}  // namespace rlink
