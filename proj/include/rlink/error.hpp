#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rlink {

enum class ErrorCode {
    // textnorm / scoring
    EmptyString,
    NonDigitInput,
    CoordinateOutOfRange,
    // blocking
    OutOfRange,
    NoFeasibleConfig,
    EmptyShingleSet,
    SignatureLengthMismatch,
    DuplicateRecordId,
    // entity store
    SchemaMismatch,
    MalformedRow,
    VersionMismatch,
    ChecksumMismatch,
    IdOutOfRange,
    // short names
    EmptyCorpus,
    // gazetteer
    MalformedGazetteerRow,
    // pipeline / service / evalbench
    EmptyQueryName,
    InvalidConfig,
    InvalidGroundTruth,
    InfeasibleSimilarity,
    ServiceUnreachable,
    MalformedRequest,
    IoError,
    Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. All library errors are thrown as this type.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace rlink
