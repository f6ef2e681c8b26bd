#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "swarmlink/middleware/transport.hpp"

namespace swarmlink::mw {

struct UdpEndpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  friend bool operator==(const UdpEndpoint&, const UdpEndpoint&) = default;
};

/// Parses "host:port". Throws InvalidArgument.
UdpEndpoint parse_endpoint(const std::string& text);

/// Reserved topic carrying subscription announcements between UDP peers.
/// Payload: one line per local subscription, "r <topic>" or "b <topic>".
inline constexpr const char* kAnnounceTopic = "bus/sub";

/// One IPv4 datagram socket per node. Every data frame is one datagram sent
/// to every configured peer; receivers without a subscription ignore it.
/// Reliable readers are learned from the peers' periodic announcements.
/// send/receive/announce are safe to call from any thread.
class UdpTransport final : public Transport {
 public:
  UdpTransport(NodeId self, UdpEndpoint bind, std::map<NodeId, UdpEndpoint> peers,
               std::uint64_t announce_period_us = 1'000'000);
  ~UdpTransport() override;

  UdpTransport(const UdpTransport&) = delete;
  UdpTransport& operator=(const UdpTransport&) = delete;

  NodeId self() const override { return self_; }
  void send(NodeId to, std::vector<std::uint8_t> frame, std::uint64_t now_us) override;
  std::vector<InboundFrame> receive() override;
  std::vector<NodeId> destinations(const TopicName& topic) const override;
  std::vector<NodeId> reliable_readers(const TopicName& topic) const override;
  void announce(const TopicName& topic, QosProfile qos) override;

  /// Adds or replaces a peer and announces local subscriptions to it.
  void set_peer(NodeId peer, UdpEndpoint endpoint);

  /// Drops all traffic to and from `peer` until unblocked (fault injection).
  void block(NodeId peer);
  void unblock(NodeId peer);

  std::uint16_t bound_port() const noexcept { return bound_port_; }

 private:
  void receive_loop();
  void send_announcement();
  void send_raw(const UdpEndpoint& to, const std::vector<std::uint8_t>& bytes);

  NodeId self_;
  std::map<NodeId, UdpEndpoint> peers_;
  std::uint64_t announce_period_us_;
  int fd_ = -1;
  std::uint16_t bound_port_ = 0;

  mutable std::mutex mu_;
  std::vector<InboundFrame> inbox_;
  std::map<TopicName, bool> local_subs_;                       // topic -> reliable
  std::map<NodeId, std::map<TopicName, bool>> remote_subs_;    // peer -> topic -> reliable
  std::set<NodeId> blocked_;
  std::uint64_t announce_seq_ = 0;

  std::atomic<bool> running_{true};
  std::thread receiver_;
};

}  // namespace swarmlink::mw
