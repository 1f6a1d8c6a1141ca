#pragma once

#include <stdexcept>
#include <string>

namespace edgetrack {

enum class ErrorCode {
  ParseError,
  IoError,
  IndexOutOfRange,
  NonPlanarFace,
  DegenerateFace,
  NonManifoldEdge,
  NonPositiveDepth,
  NoConvergence,
  LogNearPi,
  ImageTooSmall,
  EmptyProfile,
  DegenerateSegment,
  InsufficientPoints,
  DegenerateConfiguration,
  DivergedBehindCamera,
  NotEnoughMatches,
  NoConsensus,
  InitializationFailed,
  InsufficientViews,
  DegenerateMotion,
  LengthMismatch,
  LookAtDegenerate,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonPlanarFace: return "NonPlanarFace";
    case ErrorCode::DegenerateFace: return "DegenerateFace";
    case ErrorCode::NonManifoldEdge: return "NonManifoldEdge";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::LogNearPi: return "LogNearPi";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::EmptyProfile: return "EmptyProfile";
    case ErrorCode::DegenerateSegment: return "DegenerateSegment";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DivergedBehindCamera: return "DivergedBehindCamera";
    case ErrorCode::NotEnoughMatches: return "NotEnoughMatches";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::InitializationFailed: return "InitializationFailed";
    case ErrorCode::InsufficientViews: return "InsufficientViews";
    case ErrorCode::DegenerateMotion: return "DegenerateMotion";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::LookAtDegenerate: return "LookAtDegenerate";
  }
  return "Unknown";
}

/// Library-wide exception. `code()` identifies the failure class so callers
/// can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace edgetrack
