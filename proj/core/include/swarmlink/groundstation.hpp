#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "swarmlink/messages.hpp"
#include "swarmlink/text.hpp"

namespace swarmlink {

struct CommandResponse {
  bool accepted = false;
  std::uint64_t command_id = 0;
  std::string reason;
  int http_status = 202;  // 202 accepted, 400 invalid, 404 unknown uav, 503 busy
};

/// One audit line. `source` is "operator" for commands handled here and
/// "uav_result" for per-UAV outcomes reported back over swarm/cmd_result.
struct AuditEntry {
  std::uint64_t t_us = 0;
  std::uint64_t command_id = 0;
  std::string source;
  std::string action;
  bool accepted = false;
  std::string reason;
  std::optional<UavId> uav;
  std::uint64_t seq = 0;  // gcs/cmd envelope seq of an accepted operator command
  Json command;           // operator command as received
};

Json to_json_value(const AuditEntry& entry);

/// Controller + model of the ground station: validates operator commands
/// against the latest snapshot, publishes accepted ones through `send`
/// (gcs/cmd) and keeps an append-only audit log. Thread-safe.
class GroundStation {
 public:
  /// Publishes one gcs/cmd message and returns its envelope seq. May throw
  /// BackPressure.
  using Sender = std::function<std::uint64_t(const GcsCommand&, std::uint64_t now_us)>;
  using AuditHook = std::function<void(const AuditEntry&)>;

  explicit GroundStation(Sender send, std::uint64_t stale_after_us = 1'000'000);

  CommandResponse handle_command(const OperatorCommand& command, std::uint64_t now_us);

  void on_snapshot(const SwarmSnapshot& snapshot, std::uint64_t now_us);
  void on_outcome(const CommandOutcome& outcome, std::uint64_t now_us);

  std::optional<SwarmSnapshot> latest_snapshot() const;
  /// No swarm/state received for longer than the stale threshold.
  bool stale(std::uint64_t now_us) const;

  /// Entries whose command_id is greater than `since`, in append order.
  std::vector<AuditEntry> audit_since(std::uint64_t since) const;
  std::size_t audit_size() const;

  void set_audit_hook(AuditHook hook);

 private:
  std::optional<std::string> validate(const OperatorCommand& command, int& status) const;
  void append(AuditEntry entry);

  Sender send_;
  std::uint64_t stale_after_us_;
  mutable std::mutex mu_;
  std::optional<SwarmSnapshot> latest_;
  std::optional<std::uint64_t> latest_rx_us_;
  std::uint64_t next_command_id_ = 1;
  std::vector<AuditEntry> audit_;
  AuditHook audit_hook_;
};

struct FeedItem {
  SwarmSnapshot snapshot;
  bool stale = false;
};

/// Canonical snapshot text with the stale flag added at top level.
Json feed_json(const FeedItem& item);

/// Fan-out of swarm/state to stream clients. Each client holds at most one
/// pending snapshot (the newest) and is served at most once per
/// `min_interval_us`. While no snapshot arrives for `stale_after_us`, each
/// client gets a synthesized empty stale snapshot once per `stale_period_us`.
class SnapshotFeed {
 public:
  using ClientId = std::uint64_t;

  explicit SnapshotFeed(std::uint64_t min_interval_us = 100'000, std::uint64_t stale_after_us = 1'000'000,
                        std::uint64_t stale_period_us = 1'000'000);

  ClientId connect(std::uint64_t now_us);
  void disconnect(ClientId client);
  std::size_t clients() const;

  void publish(const SwarmSnapshot& snapshot, std::uint64_t now_us);

  /// Next item for `client`, if any is due.
  std::optional<FeedItem> poll(ClientId client, std::uint64_t now_us);

 private:
  struct Client {
    std::optional<SwarmSnapshot> pending;
    std::optional<std::uint64_t> last_sent_us;
    std::uint64_t connected_us = 0;
    std::optional<std::uint64_t> last_stale_us;
  };

  std::uint64_t min_interval_us_;
  std::uint64_t stale_after_us_;
  std::uint64_t stale_period_us_;
  mutable std::mutex mu_;
  std::map<ClientId, Client> clients_;
  ClientId next_client_ = 1;
  std::optional<SwarmSnapshot> latest_;
  std::optional<std::uint64_t> last_snapshot_us_;
};

}  // namespace swarmlink
