#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "swarmlink/groundstation.hpp"
#include "swarmlink/middleware/udp_transport.hpp"
#include "swarmlink/realtime.hpp"
#include "swarmlink/scenario.hpp"

namespace swarmlink {

/// What the HTTP/WS front end needs from a running swarm.
class GcsBackend {
 public:
  virtual ~GcsBackend() = default;

  virtual CommandResponse submit(const OperatorCommand& command) = 0;
  virtual std::optional<SwarmSnapshot> latest_snapshot() const = 0;
  virtual bool stale() const = 0;
  virtual std::vector<AuditEntry> audit_since(std::uint64_t since) const = 0;
  virtual SnapshotFeed& feed() = 0;
  /// The clock the snapshot feed runs on.
  virtual std::uint64_t now_us() const = 0;
};

struct HttpReply {
  int status = 200;
  Json body;
};

/// Routes one HTTP request (no I/O). `target` is the request target
/// including any query string.
HttpReply handle_request(GcsBackend& backend, const std::string& method, const std::string& target,
                         const std::string& body);

/// A Simulation stepped in real time (scaled by `speed`) on its own thread,
/// past the scenario duration until stopped.
class LiveSim final : public GcsBackend {
 public:
  LiveSim(ScenarioConfig config, std::ostream* trace_out, double speed = 1.0);
  ~LiveSim() override;

  void start();
  void stop();

  CommandResponse submit(const OperatorCommand& command) override;
  std::optional<SwarmSnapshot> latest_snapshot() const override;
  bool stale() const override;
  std::vector<AuditEntry> audit_since(std::uint64_t since) const override;
  SnapshotFeed& feed() override;
  std::uint64_t now_us() const override { return now_us_; }

  /// Runs `fn(sim)` with the simulation paused.
  template <typename Fn>
  auto with_sim(Fn&& fn) {
    std::lock_guard lock(mu_);
    return fn(sim_);
  }

 private:
  void loop();

  mutable std::mutex mu_;
  Simulation sim_;
  double speed_;
  std::atomic<std::uint64_t> now_us_{0};
  std::atomic<bool> running_{false};
  std::thread thread_;
};

/// A RealSwarm served over HTTP.
class RealBackend final : public GcsBackend {
 public:
  explicit RealBackend(RealSwarm& swarm) : swarm_(&swarm) {}

  CommandResponse submit(const OperatorCommand& command) override { return swarm_->submit(command); }
  std::optional<SwarmSnapshot> latest_snapshot() const override;
  bool stale() const override;
  std::vector<AuditEntry> audit_since(std::uint64_t since) const override;
  SnapshotFeed& feed() override { return swarm_->gcs_node().feed(); }
  std::uint64_t now_us() const override { return swarm_->now_us(); }

 private:
  RealSwarm* swarm_;
};

/// HTTP + WebSocket server (Boost.Beast) on one I/O thread.
///   GET  /api/swarm, /api/audit?since=N
///   POST /api/swarm/{formation,command,leader,waypoint}, /api/uav/{id}/{command,gimbal}
///   WS   /ws/state
class GcsServer {
 public:
  GcsServer(GcsBackend& backend, const mw::UdpEndpoint& bind);
  ~GcsServer();

  GcsServer(const GcsServer&) = delete;
  GcsServer& operator=(const GcsServer&) = delete;

  /// Binds and starts serving. Throws Error when the address cannot be bound.
  void start();
  void stop();
  /// Bound port (useful with port 0).
  std::uint16_t port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// "host:port" from GCS_BIND, else 127.0.0.1:8400.
std::string default_bind_address();

}  // namespace swarmlink
