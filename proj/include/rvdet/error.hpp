// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rvdet {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kIo,
  kNoData,
  kShapeMismatch,
  kPlacementFailed,
};

/// Exception type thrown by every rvdet module. The CLI maps it to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rvdet
