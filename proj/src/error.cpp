#include "memlog/error.hpp"

namespace memlog {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotJson: return "NotJson";
    case ErrorCode::OversizeLog: return "OversizeLog";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::BadDosMagic: return "BadDosMagic";
    case ErrorCode::BadPeSignature: return "BadPeSignature";
    case ErrorCode::TruncatedHeader: return "TruncatedHeader";
    case ErrorCode::MalformedSectionTable: return "MalformedSectionTable";
    case ErrorCode::BadDataDirectory: return "BadDataDirectory";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::VocabMismatch: return "VocabMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptPayload: return "CorruptPayload";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::UnlabeledLog: return "UnlabeledLog";
    case ErrorCode::InsufficientClassCount: return "InsufficientClassCount";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::ModelLoadFailure: return "ModelLoadFailure";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::WatchDirMissing: return "WatchDirMissing";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace memlog
