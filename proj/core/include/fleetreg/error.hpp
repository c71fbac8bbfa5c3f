#pragma once

#include <stdexcept>
#include <string>

namespace fleetreg {

// Broad classes mapped onto CLI exit codes: config errors exit 2, runtime
// errors exit 3. Verdict failures are data, not exceptions.
enum class ErrorKind {
  config,   // malformed input files, schema violations, bad flags
  runtime,  // capacity, illegal transitions, runner crashes, I/O
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(std::string message) {
  return Error(ErrorKind::config, std::move(message));
}

inline Error runtime_error_of(std::string message) {
  return Error(ErrorKind::runtime, std::move(message));
}

}  // namespace fleetreg
