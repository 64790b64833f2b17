#pragma once

#include <stdexcept>
#include <string>

namespace truckflow {

enum class ErrorCode {
  kIo = 1,
  kParse,
  kSchema,
  kDuplicate,
  kDomain,
  kInvalidArgument,
  kModel,
  kGuard,
  kCalibration,
};

// Single exception type for the library; the code drives the C API status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace truckflow
