#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asrfeat {

enum class ErrorCode {
  // audio_io
  MissingFile,
  UnsupportedEncoding,
  EmptyAudio,
  SampleRateMismatch,
  // mfcc
  InvalidConfig,
  DegenerateFilter,
  AudioTooShort,
  // gcu_net
  ShapeMismatch,
  ConfigWeightMismatch,
  NonFiniteActivation,
  // weight_io
  IoFailure,
  BadMagic,
  VersionUnsupported,
  ChecksumMismatch,
  TruncatedFile,
  // features
  EmptyTensor,
  KOutOfRange,
  // stats
  ZeroVariance,
  LengthMismatch,
  TooFewUtterances,
  // selection / regression
  TooFewSamples,
  KTooLarge,
  NumericalFailure,
  DimensionMismatch,
  // evaluation
  ParseError,
  RangeViolation,
  DuplicateId,
  ConsistencyDataMissing,
  TooFewSpeakers,
  FoldFailure,
  FoldStructureMismatch,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library is reported through this type. The code is
// stable and meant for programmatic checks; what() carries the detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace asrfeat
