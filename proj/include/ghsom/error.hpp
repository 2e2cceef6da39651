#pragma once

#include <stdexcept>
#include <string>

namespace ghsom {

// Mirrors ghsom_status in the C API (ghsom.h); values must stay in sync.
enum class ErrorCode : int {
  invalid_argument = 1,
  data = 2,
  io = 3,
  format = 4,
  version = 5,
  integrity = 6,
  degenerate = 7,
  state = 8,
  busy = 9,
  not_found = 10,
  internal = 11,
};

const char* to_string(ErrorCode code) noexcept;

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

}  // namespace ghsom
