#pragma once

#include <cstdint>
#include <vector>

#include "swarmlink/middleware/envelope.hpp"

namespace swarmlink::mw {

struct InboundFrame {
  NodeId from = 0;
  std::vector<std::uint8_t> bytes;
  std::uint64_t arrival_us = 0;  // transport clock at arrival
};

/// One node's attachment to a network. Implementations: SimEndpoint
/// (deterministic, single-threaded) and UdpTransport (thread-safe).
class Transport {
 public:
  virtual ~Transport() = default;

  virtual NodeId self() const = 0;

  /// Hands one encoded frame to the network. Never blocks; loss is silent.
  virtual void send(NodeId to, std::vector<std::uint8_t> frame, std::uint64_t now_us) = 0;

  /// Drains frames that have arrived for this node.
  virtual std::vector<InboundFrame> receive() = 0;

  /// Remote nodes that should receive data frames on `topic`, ascending.
  virtual std::vector<NodeId> destinations(const TopicName& topic) const = 0;

  /// Remote nodes with a Reliable subscription on `topic`, ascending. A
  /// Reliable publish waits for an ack from each of these.
  virtual std::vector<NodeId> reliable_readers(const TopicName& topic) const = 0;

  /// Records that this node subscribed to `topic`.
  virtual void announce(const TopicName& topic, QosProfile qos) = 0;
};

}  // namespace swarmlink::mw
