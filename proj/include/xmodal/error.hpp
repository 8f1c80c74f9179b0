#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xmodal {

// Stable identifiers; the CLI prints them verbatim on the error stream.
enum class ErrorCode {
  kIo,
  kBadMagic,
  kUnsupportedVersion,
  kUnsupportedDtype,
  kTruncated,
  kDuplicateId,
  kNonFinite,
  kInvalidArgument,
  kDimensionMismatch,
  kZeroNorm,
  kUnresolvedId,
  kDuplicateRelation,
  kEmptyInput,
  kOutOfRange,
  kCountMismatch,
  kMissingQuery,
  kIncompatibleReports,
  kTooLarge,
  kParse,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace xmodal
