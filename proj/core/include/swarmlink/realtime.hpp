#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "swarmlink/middleware/udp_transport.hpp"
#include "swarmlink/scenario.hpp"

namespace swarmlink {

/// Runs a scenario as concurrent node threads over UDP on the loopback
/// interface, paced by the wall clock. Events fire at their wall time. Not
/// deterministic.
class RealSwarm {
 public:
  /// Binds one UDP socket per node on `host` (ephemeral ports).
  RealSwarm(ScenarioConfig config, std::ostream* trace_out, std::string host = "127.0.0.1");
  ~RealSwarm();

  RealSwarm(const RealSwarm&) = delete;
  RealSwarm& operator=(const RealSwarm&) = delete;

  /// Starts the node threads. Idempotent.
  void start();
  /// Stops and joins the node threads. Idempotent.
  void stop();

  /// start(), plays the scenario events until `duration_s`, then stop().
  RunSummary run();

  /// Microseconds since start().
  std::uint64_t now_us() const;

  /// Operator command through the ground station (503 "ground station down"
  /// once it has been killed).
  CommandResponse submit(const OperatorCommand& command);
  GcsNode* gcs() noexcept { return gcs_->alive ? gcs_->gcs.get() : nullptr; }
  /// The ground-station node object, dead or alive.
  GcsNode& gcs_node() noexcept { return *gcs_->gcs; }

  void apply(const ScenarioEvent& event);
  RunSummary summary() const;

 private:
  struct Node {
    NodeId id = 0;
    std::unique_ptr<mw::UdpTransport> transport;
    std::unique_ptr<mw::Bus> bus;
    std::unique_ptr<UavNode> uav;
    std::unique_ptr<GcsNode> gcs;
    std::atomic<bool> alive{true};
    std::thread thread;
    std::mutex queue_mu;
    std::vector<std::function<void()>> queue;  // runs on the node thread
  };

  void loop(Node& node);
  void post(Node& node, std::function<void()> action);
  Node* find(NodeId id);
  std::vector<TruthTarget> truth() const;

  ScenarioConfig config_;
  TraceWriter trace_;
  std::vector<std::unique_ptr<Node>> nodes_;
  Node* gcs_ = nullptr;
  std::atomic<bool> running_{false};
  std::chrono::steady_clock::time_point start_;

  mutable std::mutex poses_mu_;
  std::map<UavId, Pose> poses_;
};

}  // namespace swarmlink
