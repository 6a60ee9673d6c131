#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cube_transport {

enum class ErrorCode {
  kInvalidSpec,
  kDegenerateDensity,
  kPositivity,
  kDimension,
  kOutOfRange,
  kSizeLimit,
  kPrecondition,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` tells the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cube_transport
