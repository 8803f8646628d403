#include "designpipe/error.hpp"

namespace designpipe {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedSyntax: return "malformed-syntax";
    case ErrorKind::kSchemaViolation: return "schema-violation";
    case ErrorKind::kInsufficientExemplars: return "insufficient-exemplars";
    case ErrorKind::kNoJsonFound: return "no-json-found";
    case ErrorKind::kInvalidPlan: return "invalid-plan";
    case ErrorKind::kInvalidTypography: return "invalid-typography";
    case ErrorKind::kInvalidScores: return "invalid-scores";
    case ErrorKind::kGenerationExhausted: return "generation-exhausted";
    case ErrorKind::kUnsatisfiable: return "unsatisfiable";
    case ErrorKind::kBackendFailure: return "backend-failure";
    case ErrorKind::kMissingAsset: return "missing-asset";
    case ErrorKind::kMissingFragment: return "missing-fragment";
    case ErrorKind::kMalformedBenchmark: return "malformed-benchmark";
    case ErrorKind::kEmptyInput: return "empty-input";
    case ErrorKind::kStageFailure: return "stage-failure";
    case ErrorKind::kInputError: return "input-error";
  }
  return "unknown";
}

}  // namespace designpipe
