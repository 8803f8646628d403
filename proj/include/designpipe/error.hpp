#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace designpipe {

enum class ErrorKind {
  kMalformedSyntax,
  kSchemaViolation,
  kInsufficientExemplars,
  kNoJsonFound,
  kInvalidPlan,
  kInvalidTypography,
  kInvalidScores,
  kGenerationExhausted,
  kUnsatisfiable,
  kBackendFailure,
  kMissingAsset,
  kMissingFragment,
  kMalformedBenchmark,
  kEmptyInput,
  kStageFailure,
  kInputError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library. `detail` carries the field path,
// asset id, fragment kind or line number the error refers to, when there is one.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message, std::string detail = {})
      : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  ErrorKind kind_;
  std::string detail_;
};

// Parse failures that a caller should answer by asking the model again.
inline bool is_retryable(ErrorKind kind) {
  return kind == ErrorKind::kNoJsonFound || kind == ErrorKind::kInvalidPlan ||
         kind == ErrorKind::kInvalidTypography || kind == ErrorKind::kInvalidScores;
}

}  // namespace designpipe
