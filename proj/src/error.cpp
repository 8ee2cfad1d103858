#include "trajcurate/error.hpp"

namespace trajcurate {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::MissingManifest: return "MissingManifest";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::TruncatedBlob: return "TruncatedBlob";
    case Errc::CorruptBlob: return "CorruptBlob";
    case Errc::IoFailure: return "IoFailure";
    case Errc::InvalidArchitecture: return "InvalidArchitecture";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::EmptyTrainingSet: return "EmptyTrainingSet";
    case Errc::NegativeDuration: return "NegativeDuration";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::EmptyScores: return "EmptyScores";
    case Errc::MaskShapeMismatch: return "MaskShapeMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace trajcurate
