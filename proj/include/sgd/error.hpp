#pragma once

#include <stdexcept>
#include <string>

namespace sgd {

/// Error categories shared by the C++ core and the C API.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kParse = 2,
  kMesh = 3,
  kSingular = 4,
  kNotConverged = 5,
  kBreakdown = 6,
  kBlowUp = 7,
  kIo = 8,
  kInternal = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sgd
