#pragma once

#include <stdexcept>
#include <string>

namespace pharmatimeline {

// Process exit codes for the CLI. 0 is success, 1 is reserved for
// usage/unexpected errors.
enum class ErrorCode : int {
  MissingFile = 2,
  SchemaError = 3,
  EmptyCohort = 4,
};

class PipelineError : public std::runtime_error {
 public:
  PipelineError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }
  int exit_code() const { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

// Malformed input file; carries the offending location in the message.
class ParseError : public PipelineError {
 public:
  ParseError(const std::string& origin, size_t line_no, const std::string& what)
      : PipelineError(ErrorCode::SchemaError,
                      origin + ":" + std::to_string(line_no) + ": " + what) {}
  explicit ParseError(const std::string& message)
      : PipelineError(ErrorCode::SchemaError, message) {}
};

}  // namespace pharmatimeline
