#include "asrfeat/error.hpp"

#include <string>

namespace asrfeat {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::EmptyAudio: return "EmptyAudio";
    case ErrorCode::SampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateFilter: return "DegenerateFilter";
    case ErrorCode::AudioTooShort: return "AudioTooShort";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ConfigWeightMismatch: return "ConfigWeightMismatch";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::EmptyTensor: return "EmptyTensor";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewUtterances: return "TooFewUtterances";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::RangeViolation: return "RangeViolation";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ConsistencyDataMissing: return "ConsistencyDataMissing";
    case ErrorCode::TooFewSpeakers: return "TooFewSpeakers";
    case ErrorCode::FoldFailure: return "FoldFailure";
    case ErrorCode::FoldStructureMismatch: return "FoldStructureMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace asrfeat
