#include "protoscore/error.hpp"

namespace protoscore {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
  case ErrorKind::MissingFile: return "MissingFile";
  case ErrorKind::ShapeMismatch: return "ShapeMismatch";
  case ErrorKind::NonFiniteValue: return "NonFiniteValue";
  case ErrorKind::IoError: return "IoError";
  case ErrorKind::InvalidConfig: return "InvalidConfig";
  case ErrorKind::LaunchFailure: return "LaunchFailure";
  case ErrorKind::ProtocolVersionMismatch: return "ProtocolVersionMismatch";
  case ErrorKind::MalformedHello: return "MalformedHello";
  case ErrorKind::AdapterCrash: return "AdapterCrash";
  case ErrorKind::AdapterError: return "AdapterError";
  case ErrorKind::Timeout: return "Timeout";
  case ErrorKind::DimensionMismatch: return "DimensionMismatch";
  case ErrorKind::NonFiniteResponse: return "NonFiniteResponse";
  case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
  case ErrorKind::ReplayMiss: return "ReplayMiss";
  case ErrorKind::ProtocolViolation: return "ProtocolViolation";
  case ErrorKind::TooFewPoints: return "TooFewPoints";
  case ErrorKind::ClassTooSmall: return "ClassTooSmall";
  case ErrorKind::NoOtherCluster: return "NoOtherCluster";
  case ErrorKind::ChannelRequired: return "ChannelRequired";
  case ErrorKind::PrototypeCountMismatch: return "PrototypeCountMismatch";
  case ErrorKind::TooFewPrototypes: return "TooFewPrototypes";
  case ErrorKind::WrongArity: return "WrongArity";
  }
  return "Unknown";
}

bool is_protocol_error(ErrorKind kind) noexcept {
  switch (kind) {
  case ErrorKind::LaunchFailure:
  case ErrorKind::ProtocolVersionMismatch:
  case ErrorKind::MalformedHello:
  case ErrorKind::AdapterCrash:
  case ErrorKind::AdapterError:
  case ErrorKind::Timeout:
  case ErrorKind::DimensionMismatch:
  case ErrorKind::NonFiniteResponse:
  case ErrorKind::LabelOutOfRange:
  case ErrorKind::ReplayMiss:
  case ErrorKind::ProtocolViolation:
    return true;
  default:
    return false;
  }
}

} // namespace protoscore
