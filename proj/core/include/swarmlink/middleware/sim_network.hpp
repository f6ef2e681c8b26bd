#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "swarmlink/middleware/transport.hpp"

namespace swarmlink::mw {

struct NetworkModel {
  std::uint64_t seed = 0;
  double latency_mean_ms = 0.0;
  double latency_jitter_ms = 0.0;
  double drop_probability = 0.0;  // [0, 1)

  /// Throws InvalidArgument when out of range.
  void validate() const;
};

/// Seeded generator shared by every random network decision. The engine is
/// mt19937_64, whose output sequence is fixed by the C++ standard, and the
/// [0,1) mapping is done here so traces do not depend on the library's
/// distribution implementations.
class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Per-frame random outcome. Every send draws exactly two values, in this
/// order: the drop variate, then the jitter variate.
struct LinkDraw {
  bool dropped = false;
  std::uint64_t delay_us = 0;
};

LinkDraw draw_link(SimRng& rng, const NetworkModel& model);

enum class DropReason { random, partition, detached };

const char* to_string(DropReason reason) noexcept;

struct FrameHeader {
  TopicName topic;
  NodeId publisher = 0;
  std::uint64_t seq = 0;
  bool ack = false;
  bool reliable = false;
};

struct NetDelivery {
  NodeId from = 0;
  NodeId to = 0;
  std::uint64_t sent_us = 0;
  std::uint64_t arrival_us = 0;
  Envelope envelope;
};

struct NetDrop {
  NodeId from = 0;
  NodeId to = 0;
  std::uint64_t sent_us = 0;
  DropReason reason = DropReason::random;
  FrameHeader header;
};

class SimNetwork;

class SimEndpoint final : public Transport {
 public:
  SimEndpoint(SimNetwork& net, NodeId id) : net_(&net), id_(id) {}

  NodeId self() const override { return id_; }
  void send(NodeId to, std::vector<std::uint8_t> frame, std::uint64_t now_us) override;
  std::vector<InboundFrame> receive() override;
  std::vector<NodeId> destinations(const TopicName& topic) const override;
  std::vector<NodeId> reliable_readers(const TopicName& topic) const override;
  void announce(const TopicName& topic, QosProfile qos) override;

  bool alive() const noexcept { return alive_; }

 private:
  friend class SimNetwork;
  SimNetwork* net_;
  NodeId id_;
  bool alive_ = true;
  std::vector<InboundFrame> inbox_;
};

/// Deterministic discrete-time network. Single-threaded: driven by the
/// scenario clock through step().
class SimNetwork {
 public:
  explicit SimNetwork(NetworkModel model);

  SimNetwork(const SimNetwork&) = delete;
  SimNetwork& operator=(const SimNetwork&) = delete;

  /// Throws InvalidArgument if `id` is already attached.
  SimEndpoint& attach(NodeId id);
  /// Removes a node: in-flight frames to it are dropped and its
  /// subscriptions leave the directory. The endpoint object stays valid.
  void detach(NodeId id);
  bool attached(NodeId id) const;

  void partition(NodeId a, NodeId b);
  void restore(NodeId a, NodeId b);
  bool partitioned(NodeId a, NodeId b) const;

  /// Delivers every queued frame due at or before `now_us`, in
  /// (arrival time, send order). Throws InvalidArgument on time regression.
  std::vector<NetDelivery> step(std::uint64_t now_us);

  /// Drops recorded since the last call.
  std::vector<NetDrop> take_drops();

  const NetworkModel& model() const noexcept { return model_; }
  std::size_t in_flight() const noexcept { return queue_.size(); }
  std::uint64_t frames_sent() const noexcept { return sent_; }
  std::uint64_t frames_dropped() const noexcept { return dropped_; }

 private:
  friend class SimEndpoint;

  struct InFlight {
    std::uint64_t arrival_us;
    std::uint64_t order;
    NodeId from;
    NodeId to;
    std::uint64_t sent_us;
    std::vector<std::uint8_t> bytes;
  };
  struct Later {
    bool operator()(const InFlight& a, const InFlight& b) const {
      return a.arrival_us != b.arrival_us ? a.arrival_us > b.arrival_us : a.order > b.order;
    }
  };

  void send(NodeId from, NodeId to, std::vector<std::uint8_t> frame, std::uint64_t now_us);
  void record_drop(NodeId from, NodeId to, std::uint64_t sent_us, DropReason reason,
                   const std::vector<std::uint8_t>& bytes);
  std::vector<NodeId> readers(const TopicName& topic, NodeId exclude, bool reliable_only) const;

  NetworkModel model_;
  SimRng rng_;
  std::map<NodeId, std::unique_ptr<SimEndpoint>> endpoints_;
  std::map<TopicName, std::map<NodeId, bool>> directory_;  // topic -> node -> reliable
  std::set<std::pair<NodeId, NodeId>> partitions_;
  std::priority_queue<InFlight, std::vector<InFlight>, Later> queue_;
  std::vector<NetDrop> drops_;
  std::uint64_t order_ = 0;
  std::uint64_t last_step_us_ = 0;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
};

}  // namespace swarmlink::mw
