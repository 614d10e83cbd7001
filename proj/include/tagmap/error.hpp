#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tagmap {

enum class ErrorCode {
  InvalidArgument,
  InvalidGeometry,
  PoleProximity,
  Antimeridian,
  EmptyRegion,
  RejectionOverflow,
  InvalidK,
  DuplicateRecord,
  ProviderAuth,
  MissingDims,
  OverlappingRegions,
  BackendError,
  ParseError,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

// Validation-class errors map to CLI exit status 1, everything else to 2.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tagmap
