#pragma once

#include <stdexcept>
#include <string>

namespace m2r {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kEmptyIndex,
  kEmptyInput,
  kFrozen,
  kBudgetExceeded,
  kMissingStore,
  kModelFailure,
  kLengthMismatch,
  kMissingReference,
  kBadMagic,
  kUnsupportedVersion,
  kSizeMismatch,
  kIo,
  kFormat,
  kConfig,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures are reported through this type; `code()` lets callers
// and tests tell the failure classes apart without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace m2r
