#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trajcurate {

enum class Errc {
  // container / data errors
  MissingManifest,
  DimensionMismatch,
  NonFiniteValue,
  TruncatedBlob,
  CorruptBlob,
  IoFailure,
  // model errors
  InvalidArchitecture,
  LabelOutOfRange,
  EmptyTrainingSet,
  // scoring and clustering
  NegativeDuration,
  KTooLarge,
  EmptyInput,
  EmptyScores,
  MaskShapeMismatch,
  ShapeMismatch,
  // configuration
  InvalidConfig,
};

std::string_view errc_name(Errc code);

/// Thrown by every library operation. The CLI maps InvalidConfig to exit 1
/// and everything else to exit 2.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace trajcurate
