#include "cube_transport/error.hpp"

namespace cube_transport {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpec:
      return "invalid-spec";
    case ErrorCode::kDegenerateDensity:
      return "degenerate-density";
    case ErrorCode::kPositivity:
      return "positivity";
    case ErrorCode::kDimension:
      return "dimension";
    case ErrorCode::kOutOfRange:
      return "out-of-range";
    case ErrorCode::kSizeLimit:
      return "size-limit";
    case ErrorCode::kPrecondition:
      return "precondition";
    case ErrorCode::kIo:
      return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace cube_transport
