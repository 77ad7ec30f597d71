#include "rxn/error.hpp"

namespace rxn {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::UnknownConfigKey: return "unknown-config-key";
    case ErrorCode::MissingConfigKey: return "missing-config-key";
    case ErrorCode::ConfigType: return "config-type";
    case ErrorCode::ConfigRange: return "config-range";
    case ErrorCode::UnsupportedMode: return "unsupported-mode";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::DuplicateId: return "duplicate-id";
    case ErrorCode::EmptySequence: return "empty-sequence";
    case ErrorCode::MalformedLine: return "malformed-line";
    case ErrorCode::ConflictingAnnotation: return "conflicting-annotation";
    case ErrorCode::UnknownLabel: return "unknown-label";
    case ErrorCode::UnknownId: return "unknown-id";
    case ErrorCode::IdMismatch: return "id-mismatch";
    case ErrorCode::TooFewItems: return "too-few-items";
    case ErrorCode::Io: return "io";
    case ErrorCode::BadMagic: return "bad-magic";
    case ErrorCode::VersionMismatch: return "version-mismatch";
    case ErrorCode::ChecksumMismatch: return "checksum-mismatch";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::MalformedJson: return "malformed-json";
    case ErrorCode::RankGap: return "rank-gap";
    case ErrorCode::DuplicateRank: return "duplicate-rank";
    case ErrorCode::ForeignReaction: return "foreign-reaction";
    case ErrorCode::UnknownTemplate: return "unknown-template";
    case ErrorCode::NonFinite: return "non-finite";
  }
  return "unknown";
}

const char* to_string(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::Usage: return "usage";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Numerical: return "numerical";
  }
  return "unknown";
}

}  // namespace rxn
