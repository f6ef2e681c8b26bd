#include "swarmlink/errors.hpp"

namespace swarmlink {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::protocol_violation: return "protocol-violation";
    case Errc::message_too_large: return "message-too-large";
    case Errc::back_pressure: return "back-pressure";
    case Errc::decode_error: return "decode-error";
    case Errc::config_error: return "config-error";
    case Errc::invariant_violation: return "invariant-violation";
  }
  return "unknown";
}

const char* to_string(DecodeErrorKind kind) noexcept {
  switch (kind) {
    case DecodeErrorKind::bad_magic: return "bad-magic";
    case DecodeErrorKind::unsupported_version: return "unsupported-version";
    case DecodeErrorKind::truncated: return "truncated";
    case DecodeErrorKind::length_mismatch: return "length-mismatch";
    case DecodeErrorKind::bad_flags: return "bad-flags";
    case DecodeErrorKind::bad_field: return "bad-field";
  }
  return "unknown";
}

DecodeError::DecodeError(DecodeErrorKind kind, std::size_t position, const std::string& detail)
    : Error(Errc::decode_error,
            std::string("decode-error(") + to_string(kind) + ") at byte " + std::to_string(position) +
                (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      position_(position) {}

}  // namespace swarmlink
