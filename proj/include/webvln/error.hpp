#pragma once

#include <stdexcept>
#include <string>

namespace webvln {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kParse,
  kNotFound,
  kState,
  kClient,
  kNumeric,
  kInternal,
};

// Every failure raised by the library carries a coarse code (used by the C
// API for status mapping) and a short kind string naming the specific error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), code_(code), kind_(std::move(kind)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  ErrorCode code_;
  std::string kind_;
};

[[noreturn]] inline void fail(ErrorCode code, std::string kind, const std::string& message) {
  throw Error(code, std::move(kind), message);
}

}  // namespace webvln
