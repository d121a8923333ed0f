#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace icmap {

enum class ErrorCode {
  kEmptyPointSet,
  kInvalidSampleCount,
  kDegenerateGeometry,
  kMissingEmbedding,
  kShapeMismatch,
  kDuplicateId,
  kClassConflict,
  kInsufficientPoints,
  kNonSimplePolygon,
  kInfeasibleScene,
  kMapFormatError,
  kSceneFormatError,
  kUnsupportedVersion,
  kOrderingError,
  kInvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyPointSet: return "EmptyPointSet";
    case ErrorCode::kInvalidSampleCount: return "InvalidSampleCount";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kClassConflict: return "ClassConflict";
    case ErrorCode::kInsufficientPoints: return "InsufficientPoints";
    case ErrorCode::kNonSimplePolygon: return "NonSimplePolygon";
    case ErrorCode::kInfeasibleScene: return "InfeasibleScene";
    case ErrorCode::kMapFormatError: return "MapFormatError";
    case ErrorCode::kSceneFormatError: return "SceneFormatError";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kOrderingError: return "OrderingError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace icmap
