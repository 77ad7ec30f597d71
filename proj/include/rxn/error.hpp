#pragma once

#include <stdexcept>
#include <string>

namespace rxn {

// Every failure the library reports carries a code; the CLI maps codes onto
// process exit statuses through category().
enum class ErrorCode {
  // usage
  InvalidArgument,
  UnknownConfigKey,
  MissingConfigKey,
  ConfigType,
  ConfigRange,
  UnsupportedMode,
  // data
  EmptyInput,
  DuplicateId,
  EmptySequence,
  MalformedLine,
  ConflictingAnnotation,
  UnknownLabel,
  UnknownId,
  IdMismatch,
  TooFewItems,
  Io,
  // file formats
  BadMagic,
  VersionMismatch,
  ChecksumMismatch,
  ShapeMismatch,
  Truncated,
  // structured responses
  MalformedJson,
  RankGap,
  DuplicateRank,
  ForeignReaction,
  UnknownTemplate,
  // numerics
  NonFinite,
};

enum class ErrorCategory { Usage, Data, Numerical };

constexpr ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownConfigKey:
    case ErrorCode::MissingConfigKey:
    case ErrorCode::ConfigType:
    case ErrorCode::ConfigRange:
    case ErrorCode::UnsupportedMode:
    case ErrorCode::UnknownTemplate:
      return ErrorCategory::Usage;
    case ErrorCode::NonFinite:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

const char* to_string(ErrorCode code);
const char* to_string(ErrorCategory cat);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rxn
