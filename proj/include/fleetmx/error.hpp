#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fleetmx {

/// Broad failure class; the CLI prints it as a machine-parseable tag.
enum class ErrorCategory {
  kInvalidArgument,
  kDimensionMismatch,
  kIo,
  kParse,
  kData,
  kNumeric,
};

std::string_view to_string(ErrorCategory category);

/// Exit code used by the CLI for each category (usage errors are 2).
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
  if (!condition) throw Error(category, message);
}

}  // namespace fleetmx
