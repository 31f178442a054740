#include "ivise/error.hpp"

namespace ivise {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateLimb: return "DegenerateLimb";
    case ErrorKind::EmptyField: return "EmptyField";
    case ErrorKind::FixtureMiss: return "FixtureMiss";
    case ErrorKind::RemoteUnavailable: return "RemoteUnavailable";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmptyFrame: return "EmptyFrame";
    case ErrorKind::MissingKeypoint: return "MissingKeypoint";
    case ErrorKind::DegenerateRegion: return "DegenerateRegion";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::UnknownGarment: return "UnknownGarment";
    case ErrorKind::UnknownColor: return "UnknownColor";
    case ErrorKind::EmptyQuery: return "EmptyQuery";
    case ErrorKind::UnknownCamera: return "UnknownCamera";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::UnknownKind: return "UnknownKind";
    case ErrorKind::MalformedPayload: return "MalformedPayload";
    case ErrorKind::FogDisconnected: return "FogDisconnected";
    case ErrorKind::UnknownEdge: return "UnknownEdge";
    case ErrorKind::UnknownQuery: return "UnknownQuery";
    case ErrorKind::NoEdgesInScope: return "NoEdgesInScope";
    case ErrorKind::OverlapError: return "OverlapError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, std::string message, std::string detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(std::move(detail)) {}

}  // namespace ivise
