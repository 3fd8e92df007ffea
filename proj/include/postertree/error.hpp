#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace postertree {

enum class ErrorCode {
  kInvalidArgument,
  kNoSvgBlock,
  kMalformedGeometry,
  kDepthExceeded,
  kBadAspect,
  kDimensionMismatch,
  kMissingComponent,
  kDimMismatch,
  kEmptyDataset,
  kKTooLarge,
  kStrategyQueryMismatch,
  kTemplateFieldMissing,
  kBackendUnavailable,
  kAllCandidatesMalformed,
  kTimeout,
  kEmptyAfterSanitation,
  kUnknownId,
  kMaterialMismatch,
  kIo,
  kFormat,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNoSvgBlock: return "NoSvgBlock";
    case ErrorCode::kMalformedGeometry: return "MalformedGeometry";
    case ErrorCode::kDepthExceeded: return "DepthExceeded";
    case ErrorCode::kBadAspect: return "BadAspect";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kMissingComponent: return "MissingComponent";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kStrategyQueryMismatch: return "StrategyQueryMismatch";
    case ErrorCode::kTemplateFieldMissing: return "TemplateFieldMissing";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kAllCandidatesMalformed: return "AllCandidatesMalformed";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kEmptyAfterSanitation: return "EmptyAfterSanitation";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kMaterialMismatch: return "MaterialMismatch";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kFormat: return "Format";
  }
  return "Unknown";
}

// Every failure surfaced by the library carries one of the codes above so
// callers (and the CLI's error JSON) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace postertree
