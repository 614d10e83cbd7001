#include "tagmap/error.hpp"

namespace tagmap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::PoleProximity: return "PoleProximity";
    case ErrorCode::Antimeridian: return "Antimeridian";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::RejectionOverflow: return "RejectionOverflow";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::DuplicateRecord: return "DuplicateRecord";
    case ErrorCode::ProviderAuth: return "ProviderAuth";
    case ErrorCode::MissingDims: return "MissingDims";
    case ErrorCode::OverlappingRegions: return "OverlappingRegions";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidGeometry:
    case ErrorCode::PoleProximity:
    case ErrorCode::Antimeridian:
    case ErrorCode::InvalidK:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidConfig:
      return true;
    default:
      return false;
  }
}

}  // namespace tagmap
