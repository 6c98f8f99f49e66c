#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semsplat {

enum class ErrorCode {
  kInvalidParameter,
  kConfiguration,
  kUnavailableEncoder,
  kEditConflict,
  // Format / validation failures raised by the io layer.
  kMissingFile,
  kParse,
  kMissingKey,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kLengthMismatch,
  kDimensionMismatch,
  kLabelOutOfRange,
  kNotUnitNorm,
  kDuplicateLabel,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Validation failure tied to a file. `location` is a byte offset, JSON key
/// or frame name, whichever pinpoints the problem.
class FormatError : public Error {
 public:
  FormatError(ErrorCode code, std::string file, std::string location,
              const std::string& detail);

  const std::string& file() const noexcept { return file_; }
  const std::string& location() const noexcept { return location_; }

 private:
  std::string file_;
  std::string location_;
};

[[noreturn]] void throw_invalid(const std::string& message);

}  // namespace semsplat
