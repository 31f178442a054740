#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ivise {

enum class ErrorKind {
  // pose-geometry
  DegenerateLimb,
  EmptyField,
  // pose-provider
  FixtureMiss,
  RemoteUnavailable,
  MalformedResponse,
  ParseError,
  // region-extractor
  EmptyFrame,
  MissingKeypoint,
  DegenerateRegion,
  // color-engine
  EmptyRegion,
  KTooLarge,
  // query-engine
  UnknownGarment,
  UnknownColor,
  EmptyQuery,
  UnknownCamera,
  // wire-protocol
  VersionMismatch,
  TruncatedPayload,
  UnknownKind,
  MalformedPayload,
  // services
  FogDisconnected,
  UnknownEdge,
  UnknownQuery,
  NoEdgesInScope,
  OverlapError,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as ivise::Error. `detail` carries the
// offending token, field or section where one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::string detail = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace ivise
