#include "semsplat/error.hpp"

namespace semsplat {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kUnavailableEncoder: return "unavailable-encoder";
    case ErrorCode::kEditConflict: return "edit-conflict";
    case ErrorCode::kMissingFile: return "missing-file";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kMissingKey: return "missing-key";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported-version";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kLabelOutOfRange: return "label-out-of-range";
    case ErrorCode::kNotUnitNorm: return "not-unit-norm";
    case ErrorCode::kDuplicateLabel: return "duplicate-label";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

FormatError::FormatError(ErrorCode code, std::string file, std::string location,
                         const std::string& detail)
    : Error(code, file + " [" + location + "]: " + detail),
      file_(std::move(file)),
      location_(std::move(location)) {}

void throw_invalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidParameter, message);
}

}  // namespace semsplat
