#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace geeg {

enum class ErrorCode {
  InvalidSpec,
  TooShortInput,
  NonFiniteInput,
  InvalidFrame,
  InvalidSegment,
  MissingAccelStream,
  ShapeMismatch,
  IcaNotConverged,
  TooFewValidSamples,
  ZeroTotalPower,
  NonPositivePower,
  ZeroAlpha,
  SubjectMismatch,
  DegenerateSpread,
  DegenerateInput,
  LengthMismatch,
  MalformedPacket,
  ArityMismatch,
  ConnectionRefused,
  SubscriptionDenied,
  PayloadDecode,
  NetworkUnreachable,
  Io,
  FileLoad,
  MissingBaseline,
  EmptySession,
  InsufficientCell,
  InvalidConfig,
  Protocol,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Malformed OSC input; offset points at the first byte that could not be
// decoded.
class OscParseError : public Error {
 public:
  OscParseError(std::size_t offset, const std::string& what)
      : Error(ErrorCode::MalformedPacket,
              what + " at byte " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace geeg
