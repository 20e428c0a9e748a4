#pragma once

#include <stdexcept>
#include <string>

namespace urbanforge {

enum class ErrorCode {
  Parse,
  Shape,
  DegenerateGeometry,
  EmptyScene,
  EmptyInput,
  DesignerUnavailable,
  MalformedDesign,
  GeneratorUnavailable,
  MalformedResponse,
  CriticUnavailable,
  AtlasOverflow,
  NoSourceTexels,
  IncompleteScene,
  Io,
  InvalidEndpoint,
  NoPathFound,
  InvalidPlan,
  ExtractorMismatch,
  InsufficientSamples,
  DegenerateFrame,
  Config,
  Internal,
};
inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Shape: return "ShapeError";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::EmptyScene: return "EmptyScene";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DesignerUnavailable: return "DesignerUnavailable";
    case ErrorCode::MalformedDesign: return "MalformedDesign";
    case ErrorCode::GeneratorUnavailable: return "GeneratorUnavailable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::CriticUnavailable: return "CriticUnavailable";
    case ErrorCode::AtlasOverflow: return "AtlasOverflow";
    case ErrorCode::NoSourceTexels: return "NoSourceTexels";
    case ErrorCode::IncompleteScene: return "IncompleteScene";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::InvalidEndpoint: return "InvalidEndpoint";
    case ErrorCode::NoPathFound: return "NoPathFound";
    case ErrorCode::InvalidPlan: return "InvalidPlan";
    case ErrorCode::ExtractorMismatch: return "ExtractorMismatch";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DegenerateFrame: return "DegenerateFrame";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Internal: return "InternalError";
  }
  return "Error";
}

/// Exit-status category: 2 config, 3 input, 4 endpoint, 5 internal.
inline int exit_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
      return 2;
    case ErrorCode::Parse:
    case ErrorCode::Shape:
    case ErrorCode::DegenerateGeometry:
    case ErrorCode::EmptyScene:
    case ErrorCode::EmptyInput:
    case ErrorCode::Io:
    case ErrorCode::InvalidEndpoint:
    case ErrorCode::InvalidPlan:
    case ErrorCode::ExtractorMismatch:
    case ErrorCode::InsufficientSamples:
    case ErrorCode::DegenerateFrame:
    case ErrorCode::IncompleteScene:
      return 3;
    case ErrorCode::DesignerUnavailable:
    case ErrorCode::MalformedDesign:
    case ErrorCode::GeneratorUnavailable:
    case ErrorCode::MalformedResponse:
    case ErrorCode::CriticUnavailable:
      return 4;
    default:
      return 5;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace urbanforge
