#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "swarmlink/middleware/transport.hpp"

namespace swarmlink::mw {

/// Queue of envelopes delivered to one subscriber, in per-stream seq order.
/// BestEffort subscriptions keep only the newest `history_depth` entries.
class Subscription {
 public:
  Subscription(TopicName topic, QosProfile qos) : topic_(std::move(topic)), qos_(qos) {}

  const TopicName& topic() const noexcept { return topic_; }
  QosProfile qos() const noexcept { return qos_; }

  std::optional<Envelope> take();
  std::vector<Envelope> drain();
  std::size_t size() const;

 private:
  friend class Bus;
  void push(const Envelope& e);

  TopicName topic_;
  QosProfile qos_;
  mutable std::mutex mu_;
  std::deque<Envelope> queue_;
};

using SubscriptionHandle = std::shared_ptr<Subscription>;

/// Observation points, used by the scenario runner for tracing. Called with
/// the bus lock held; must not call back into the bus.
struct BusHooks {
  /// `awaiting` lists the Reliable readers whose acks the writer waits for.
  std::function<void(const Envelope&, const std::vector<NodeId>& destinations, const std::vector<NodeId>& awaiting)>
      on_publish;
  /// One call per envelope surfaced to this node's subscriptions.
  /// `arrival_us` is when the carrying frame reached this node.
  std::function<void(const Envelope&, NodeId from, bool loopback, std::uint64_t arrival_us)> on_deliver;
  std::function<void(const Envelope&, NodeId to, std::uint32_t attempt)> on_retransmit;
  std::function<void(const TopicName&, std::uint64_t seq, const std::vector<NodeId>& unacked)> on_give_up;
  std::function<void(const TopicName&, NodeId publisher, std::uint64_t from_seq, std::uint64_t to_seq)> on_gap_skip;
};

struct BusConfig {
  std::uint64_t retransmit_period_us = 100'000;
  std::uint32_t max_retransmits = 10;
  /// A Reliable reader waits this long for a missing seq before skipping it.
  std::uint64_t gap_timeout_us = 1'500'000;
};

struct BusStats {
  std::uint64_t published = 0;
  std::uint64_t delivered = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t give_ups = 0;
  std::uint64_t acks_sent = 0;
  std::uint64_t decode_errors = 0;
};

/// Topic-based publish/subscribe endpoint of one node. Reliable streams use
/// per-seq acks from each matched Reliable reader, periodic retransmission,
/// and ordered, de-duplicated delivery at the reader. Thread-safe.
class Bus {
 public:
  explicit Bus(Transport& transport, BusConfig config = {});

  NodeId self() const { return transport_->self(); }

  SubscriptionHandle subscribe(const TopicName& topic, QosProfile qos);

  /// Sends `envelope` (publisher must be this node; timestamp_us is the send
  /// time). Throws MessageTooLarge, ProtocolViolation on seq misuse, or
  /// BackPressure when a Reliable stream's buffer is full of unacked data.
  void publish(const Envelope& envelope);

  /// Processes arrived frames and due retransmissions.
  void poll(std::uint64_t now_us);

  /// Next seq this node would use on `topic`.
  std::uint64_t next_seq(const TopicName& topic) const;
  /// Unacknowledged Reliable messages held for `topic`.
  std::size_t retained(const TopicName& topic) const;

  BusStats stats() const;
  void set_hooks(BusHooks hooks);

 private:
  struct Pending {
    std::uint64_t seq = 0;
    std::vector<std::uint8_t> frame;
    Envelope envelope;
    std::vector<NodeId> awaiting;
    std::uint32_t attempts = 0;
    std::uint64_t next_retransmit_us = 0;
  };
  struct WriterStream {
    std::uint64_t last_seq = 0;
    std::deque<Pending> retained;
  };
  struct ReaderStream {
    std::uint64_t expected = 1;   // reliable: next seq to surface
    std::uint64_t watermark = 0;  // best-effort: highest surfaced seq
    std::map<std::uint64_t, std::pair<Envelope, std::uint64_t>> held;  // seq -> (envelope, arrival)
    std::uint64_t gap_since_us = 0;
  };
  using StreamKey = std::pair<NodeId, TopicName>;

  void handle_frame(const InboundFrame& frame, std::uint64_t now_us);
  void handle_ack(const Envelope& ack);
  void handle_data(const Envelope& data, NodeId from, std::uint64_t arrival_us, std::uint64_t now_us);
  void surface(const Envelope& e, NodeId from, bool loopback, std::uint64_t arrival_us);
  void flush_in_order(ReaderStream& stream, NodeId from);
  void retransmit_due(std::uint64_t now_us);
  void skip_stale_gaps(std::uint64_t now_us);

  Transport* transport_;
  BusConfig config_;
  mutable std::mutex mu_;
  std::map<TopicName, std::vector<SubscriptionHandle>> subscriptions_;
  std::map<TopicName, WriterStream> writers_;
  std::map<StreamKey, ReaderStream> readers_;
  BusHooks hooks_;
  BusStats stats_;
};

/// Owns the seq counter of one (node, topic) stream.
class Publisher {
 public:
  Publisher(Bus& bus, TopicName topic, QosProfile qos) : bus_(&bus), topic_(std::move(topic)), qos_(qos) {}

  /// Publishes and returns the seq used. On BackPressure the seq is not consumed.
  std::uint64_t publish(std::vector<std::uint8_t> payload, std::uint64_t now_us);

  const TopicName& topic() const noexcept { return topic_; }
  QosProfile qos() const noexcept { return qos_; }

 private:
  Bus* bus_;
  TopicName topic_;
  QosProfile qos_;
};

}  // namespace swarmlink::mw
