#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swarmlink/middleware/envelope.hpp"

namespace swarmlink::mw {

// Frame layout, big-endian:
//   0-3   magic "SWM1"       4  version (1)        5  flags (bit0 reliable, bit1 ack)
//   6-7   publisher (u16)    8-15 seq (u64)        16-23 timestamp_us (u64)
//   24    history_depth - 1  25 topic length       26-27 payload length (u16)
//   28..  topic bytes, then payload bytes
inline constexpr std::uint32_t kFrameMagic = 0x53574D31;
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 28;

inline constexpr std::uint8_t kFlagReliable = 0x01;
inline constexpr std::uint8_t kFlagAck = 0x02;

/// Throws MessageTooLarge / InvalidArgument for envelopes that cannot be framed.
std::vector<std::uint8_t> encode_frame(const Envelope& envelope);

/// Throws DecodeError carrying the failing byte position.
Envelope decode_frame(std::span<const std::uint8_t> bytes);

/// Builds the acknowledgement for `data` as sent by node `acker`.
Envelope make_ack(const Envelope& data, NodeId acker, std::uint64_t now_us);

/// Seq carried in an ack frame's payload.
std::uint64_t acked_seq(const Envelope& ack);

}  // namespace swarmlink::mw
