#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace protoscore {

enum class ErrorKind {
  // data ingestion
  MissingFile,
  ShapeMismatch,
  NonFiniteValue,
  IoError,
  InvalidConfig,
  // adapter protocol
  LaunchFailure,
  ProtocolVersionMismatch,
  MalformedHello,
  AdapterCrash,
  AdapterError,
  Timeout,
  DimensionMismatch,
  NonFiniteResponse,
  LabelOutOfRange,
  ReplayMiss,
  ProtocolViolation,
  // clustering and metrics
  TooFewPoints,
  ClassTooSmall,
  NoOtherCluster,
  ChannelRequired,
  PrototypeCountMismatch,
  TooFewPrototypes,
  WrongArity,
};

std::string_view to_string(ErrorKind kind) noexcept;

// True for failures caused by the model adapter or its transport.
bool is_protocol_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

  // Same kind, message prefixed with where it happened.
  Error in_context(std::string_view where) const { return Error(kind_, std::string(where) + ": " + detail_); }

private:
  ErrorKind kind_;
  std::string detail_;
};

} // namespace protoscore
