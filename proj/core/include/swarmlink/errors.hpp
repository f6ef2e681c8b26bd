#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace swarmlink {

enum class Errc {
  invalid_argument,
  protocol_violation,
  message_too_large,
  back_pressure,
  decode_error,
  config_error,
  invariant_violation,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(Errc::invalid_argument, what) {}
};

class ProtocolViolation : public Error {
 public:
  explicit ProtocolViolation(const std::string& what) : Error(Errc::protocol_violation, what) {}
};

class MessageTooLarge : public Error {
 public:
  explicit MessageTooLarge(const std::string& what) : Error(Errc::message_too_large, what) {}
};

class BackPressure : public Error {
 public:
  explicit BackPressure(const std::string& what) : Error(Errc::back_pressure, what) {}
};

class InvariantViolation : public Error {
 public:
  explicit InvariantViolation(const std::string& what) : Error(Errc::invariant_violation, what) {}
};

/// Scenario/config problem, anchored to a 1-based source line (0 when unknown).
class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : Error(Errc::config_error, what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class DecodeErrorKind { bad_magic, unsupported_version, truncated, length_mismatch, bad_flags, bad_field };

const char* to_string(DecodeErrorKind kind) noexcept;

class DecodeError : public Error {
 public:
  DecodeError(DecodeErrorKind kind, std::size_t position, const std::string& detail = {});

  DecodeErrorKind kind() const noexcept { return kind_; }
  /// Byte offset in the frame at which decoding failed.
  std::size_t position() const noexcept { return position_; }

 private:
  DecodeErrorKind kind_;
  std::size_t position_;
};

}  // namespace swarmlink
