#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace osteo {

/// Machine-readable failure categories. The service maps these onto HTTP
/// status codes and the CLI onto exit codes.
enum class ErrorCode {
  InvalidParameter,
  DegenerateImage,
  DegenerateHistogram,
  DegenerateKmeans,
  DimensionMismatch,
  EmptyMask,
  UnknownKey,
  InsufficientData,
  Io,
  Schema,
  MissingInput,  // a request needs state that has not been produced yet
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string step = {})
      : std::runtime_error(step.empty() ? message : step + ": " + message),
        code_(code),
        detail_(message),
        step_(std::move(step)) {}

  ErrorCode code() const noexcept { return code_; }

  /// Pipeline step that raised the error, empty for direct calls.
  const std::string& step() const noexcept { return step_; }

  /// Message without the step prefix.
  const std::string& detail() const noexcept { return detail_; }

  /// Same error re-tagged with the pipeline step name.
  Error at_step(const std::string& step) const;

 private:
  ErrorCode code_;
  std::string detail_;
  std::string step_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) {
    throw Error(code, message);
  }
}

}  // namespace osteo
