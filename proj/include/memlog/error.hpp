#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace memlog {

enum class ErrorCode {
  // logmodel
  NotJson,
  OversizeLog,
  EmptyDocument,
  // pefeatures
  BadDosMagic,
  BadPeSignature,
  TruncatedHeader,
  MalformedSectionTable,
  BadDataDirectory,
  EmptyInput,
  // embedding
  EmptyCorpus,
  VocabMismatch,
  ZeroVector,
  UnknownToken,
  // model files
  BadMagic,
  VersionMismatch,
  CorruptPayload,
  // gbdt / evaluation
  SingleClassInput,
  TooFewRows,
  NonFiniteFeature,
  UnlabeledLog,
  InsufficientClassCount,
  LengthMismatch,
  // synthgen
  InvalidSpec,
  // runtime
  InvalidArgument,
  Io,
  ModelLoadFailure,
  BindFailure,
  WatchDirMissing,
  Internal,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace memlog
