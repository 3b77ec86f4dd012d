#pragma once

#include <stdexcept>
#include <string>

namespace hairgs {

enum class ErrorCode {
  invalid_input = 1,
  degenerate_strand,
  format,
  io,
  config,
  diverged,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

// Warnings go through a process-wide sink; the default prints to stderr.
using WarningSink = void (*)(const char* message, void* user);
void set_warning_sink(WarningSink sink, void* user);
void warn(const std::string& message);

}  // namespace hairgs
