#pragma once

#include <stdexcept>
#include <string>

namespace decon {

/// Base error for every failure surfaced by the toolchain. `code` is a short
/// machine-readable identifier (e.g. "ArityMismatch"); `what()` carries the
/// human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace decon
