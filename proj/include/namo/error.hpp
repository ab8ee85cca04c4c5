#pragma once

#include <stdexcept>
#include <string>

namespace namo {

enum class ErrorCode {
  Dimension,
  Input,
  Numerical,
  Config,
  Io,
  Precondition,
};

// Single exception type for the library; the code drives the C status and
// CLI exit-code mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace namo
