#include "xmodal/error.hpp"

namespace xmodal {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kUnsupportedDtype: return "unsupported_dtype";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dim_mismatch";
    case ErrorCode::kZeroNorm: return "zero_norm";
    case ErrorCode::kUnresolvedId: return "unresolved_id";
    case ErrorCode::kDuplicateRelation: return "duplicate_relation";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kCountMismatch: return "count_mismatch";
    case ErrorCode::kMissingQuery: return "missing_query";
    case ErrorCode::kIncompatibleReports: return "incompatible_reports";
    case ErrorCode::kTooLarge: return "too_large";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

}  // namespace xmodal
