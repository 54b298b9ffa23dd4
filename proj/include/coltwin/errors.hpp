#ifndef COLTWIN_ERRORS_HPP
#define COLTWIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace coltwin {

// Exit codes used by the CLI. Each error category maps to one code so that
// callers can dispatch on the process status alone.
enum class ErrorCategory : int {
  other = 1,
  config_schema = 2,
  missing_file = 3,
  checkpoint_format = 4,
  simulator_instability = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), category_(cat) {}
  ErrorCategory category() const noexcept { return category_; }
  const char* category_name() const noexcept {
    switch (category_) {
      case ErrorCategory::config_schema: return "config-schema";
      case ErrorCategory::missing_file: return "missing-file";
      case ErrorCategory::checkpoint_format: return "checkpoint-version";
      case ErrorCategory::simulator_instability: return "simulator-instability";
      default: return "error";
    }
  }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg)
      : Error(ErrorCategory::config_schema, msg) {}
};

class MissingFileError : public Error {
 public:
  explicit MissingFileError(const std::string& msg)
      : Error(ErrorCategory::missing_file, msg) {}
};

// Covers both unreadable/corrupt checkpoints and version mismatches.
class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& msg)
      : Error(ErrorCategory::checkpoint_format, msg) {}
};

class InstabilityError : public Error {
 public:
  explicit InstabilityError(const std::string& msg)
      : Error(ErrorCategory::simulator_instability, msg) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& msg)
      : Error(ErrorCategory::other, msg) {}
};

}  // namespace coltwin

#endif  // COLTWIN_ERRORS_HPP
