#include "swarmlink/middleware/wire.hpp"

#include "swarmlink/errors.hpp"

namespace swarmlink::mw {

namespace {

template <typename T>
void put_be(std::vector<std::uint8_t>& out, T value) {
  for (int i = static_cast<int>(sizeof(T)) - 1; i >= 0; --i) {
    out.push_back(static_cast<std::uint8_t>((value >> (i * 8)) & 0xFF));
  }
}

template <typename T>
T get_be(std::span<const std::uint8_t> in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value = static_cast<T>((value << 8) | in[offset + i]);
  }
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Envelope& envelope) {
  if (envelope.payload.size() > kMaxPayloadBytes) {
    throw MessageTooLarge("payload of " + std::to_string(envelope.payload.size()) + " bytes exceeds " +
                          std::to_string(kMaxPayloadBytes));
  }
  if (!TopicName::is_valid(envelope.topic.str())) {
    throw InvalidArgument("envelope has no valid topic");
  }
  if (!envelope.qos.valid()) {
    throw InvalidArgument("history_depth out of range");
  }

  const auto& topic = envelope.topic.str();
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderSize + topic.size() + envelope.payload.size());

  std::uint8_t flags = 0;
  if (envelope.qos.is_reliable()) flags |= kFlagReliable;
  if (envelope.ack) flags |= kFlagAck;

  put_be<std::uint32_t>(out, kFrameMagic);
  out.push_back(kFrameVersion);
  out.push_back(flags);
  put_be<std::uint16_t>(out, envelope.publisher);
  put_be<std::uint64_t>(out, envelope.seq);
  put_be<std::uint64_t>(out, envelope.timestamp_us);
  out.push_back(static_cast<std::uint8_t>(envelope.qos.history_depth - 1));
  out.push_back(static_cast<std::uint8_t>(topic.size()));
  put_be<std::uint16_t>(out, static_cast<std::uint16_t>(envelope.payload.size()));
  out.insert(out.end(), topic.begin(), topic.end());
  out.insert(out.end(), envelope.payload.begin(), envelope.payload.end());
  return out;
}

Envelope decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw DecodeError(DecodeErrorKind::truncated, bytes.size(), "short magic");
  if (get_be<std::uint32_t>(bytes, 0) != kFrameMagic) throw DecodeError(DecodeErrorKind::bad_magic, 0);
  if (bytes.size() < 5) throw DecodeError(DecodeErrorKind::truncated, bytes.size(), "missing version");
  if (bytes[4] != kFrameVersion) {
    throw DecodeError(DecodeErrorKind::unsupported_version, 4, "version " + std::to_string(bytes[4]));
  }
  if (bytes.size() < kFrameHeaderSize) throw DecodeError(DecodeErrorKind::truncated, bytes.size(), "short header");

  const std::uint8_t flags = bytes[5];
  if ((flags & ~(kFlagReliable | kFlagAck)) != 0) throw DecodeError(DecodeErrorKind::bad_flags, 5);

  const std::size_t topic_len = bytes[25];
  const std::size_t payload_len = get_be<std::uint16_t>(bytes, 26);
  const std::size_t expected = kFrameHeaderSize + topic_len + payload_len;
  if (bytes.size() < expected) throw DecodeError(DecodeErrorKind::truncated, bytes.size());
  if (bytes.size() > expected) throw DecodeError(DecodeErrorKind::length_mismatch, expected, "trailing bytes");
  if (payload_len > kMaxPayloadBytes) throw DecodeError(DecodeErrorKind::bad_field, 26, "payload too large");

  std::string topic(reinterpret_cast<const char*>(bytes.data() + kFrameHeaderSize), topic_len);
  if (!TopicName::is_valid(topic)) throw DecodeError(DecodeErrorKind::bad_field, kFrameHeaderSize, "topic");

  Envelope e;
  e.topic = TopicName(std::move(topic));
  e.publisher = get_be<std::uint16_t>(bytes, 6);
  e.seq = get_be<std::uint64_t>(bytes, 8);
  e.timestamp_us = get_be<std::uint64_t>(bytes, 16);
  e.qos.reliability = (flags & kFlagReliable) ? Reliability::Reliable : Reliability::BestEffort;
  e.qos.history_depth = static_cast<std::uint16_t>(bytes[24] + 1);
  e.ack = (flags & kFlagAck) != 0;
  const auto payload_begin = bytes.begin() + static_cast<std::ptrdiff_t>(kFrameHeaderSize + topic_len);
  e.payload.assign(payload_begin, bytes.end());
  if (e.ack && e.payload.size() != 8) {
    throw DecodeError(DecodeErrorKind::bad_field, kFrameHeaderSize + topic_len, "ack payload must be 8 bytes");
  }
  return e;
}

Envelope make_ack(const Envelope& data, NodeId acker, std::uint64_t now_us) {
  Envelope ack;
  ack.topic = data.topic;
  ack.publisher = acker;
  ack.seq = data.seq;
  ack.timestamp_us = now_us;
  ack.qos = QosProfile::best_effort(1);
  ack.ack = true;
  put_be<std::uint64_t>(ack.payload, data.seq);
  return ack;
}

std::uint64_t acked_seq(const Envelope& ack) {
  if (!ack.ack || ack.payload.size() != 8) throw InvalidArgument("not an ack frame");
  return get_be<std::uint64_t>(ack.payload, 0);
}

}  // namespace swarmlink::mw
