#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "swarmlink/model.hpp"

namespace swarmlink::mw {

/// Topic name: 1..=255 bytes of [a-z0-9_/].
class TopicName {
 public:
  TopicName() = default;
  /// Throws InvalidArgument on length or charset violations.
  explicit TopicName(std::string value);

  static bool is_valid(std::string_view value) noexcept;

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const TopicName&, const TopicName&) = default;
  friend bool operator==(const TopicName&, const TopicName&) = default;

 private:
  std::string value_;
};

enum class Reliability : std::uint8_t { BestEffort, Reliable };

struct QosProfile {
  Reliability reliability = Reliability::BestEffort;
  std::uint16_t history_depth = 1;  // 1..=256

  static QosProfile best_effort(std::uint16_t depth = 1);
  static QosProfile reliable(std::uint16_t depth = 16);

  bool valid() const noexcept { return history_depth >= 1 && history_depth <= 256; }
  bool is_reliable() const noexcept { return reliability == Reliability::Reliable; }

  friend bool operator==(const QosProfile&, const QosProfile&) = default;
};

inline constexpr std::size_t kMaxPayloadBytes = 60 * 1024;

/// The wire unit. `ack` marks an acknowledgement frame whose payload is the
/// 8-byte acknowledged seq; such frames carry the acker as `publisher`.
struct Envelope {
  TopicName topic;
  NodeId publisher = 0;
  std::uint64_t seq = 0;
  std::uint64_t timestamp_us = 0;
  QosProfile qos;
  std::vector<std::uint8_t> payload;
  bool ack = false;

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

std::vector<std::uint8_t> to_bytes(std::string_view text);
std::string_view as_text(const std::vector<std::uint8_t>& bytes) noexcept;

}  // namespace swarmlink::mw
