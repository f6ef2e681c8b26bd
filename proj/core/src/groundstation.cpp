#include "swarmlink/groundstation.hpp"

#include <algorithm>

#include "swarmlink/errors.hpp"

namespace swarmlink {

Json to_json_value(const AuditEntry& e) {
  Json j{{"t_us", e.t_us},          {"command_id", e.command_id}, {"source", e.source},
         {"action", e.action},      {"accepted", e.accepted},     {"reason", e.reason},
         {"uav", e.uav ? Json(*e.uav) : Json(nullptr)}, {"seq", e.seq}};
  if (!e.command.is_null()) j["command"] = e.command;
  return j;
}

GroundStation::GroundStation(Sender send, std::uint64_t stale_after_us)
    : send_(std::move(send)), stale_after_us_(stale_after_us) {}

void GroundStation::set_audit_hook(AuditHook hook) {
  std::lock_guard lock(mu_);
  audit_hook_ = std::move(hook);
}

std::optional<std::string> GroundStation::validate(const OperatorCommand& command, int& status) const {
  auto known = [this](UavId id) { return latest_ && latest_->find(id) != nullptr; };
  status = 202;
  return std::visit(
      [&](const auto& c) -> std::optional<std::string> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, op::SetFormation>) {
          if (!c.spec.valid()) {
            status = 400;
            return "invalid formation";
          }
        } else if constexpr (std::is_same_v<T, op::SetLeader> || std::is_same_v<T, op::ForUav> ||
                             std::is_same_v<T, op::GimbalPoint>) {
          if (!known(c.id)) {
            status = 404;
            return "unknown uav";
          }
        } else if constexpr (std::is_same_v<T, op::LeaderWaypoint>) {
          if (!c.setpoint.position.finite() || !std::isfinite(c.setpoint.yaw)) {
            status = 400;
            return "invalid setpoint";
          }
        }
        return std::nullopt;
      },
      command);
}

CommandResponse GroundStation::handle_command(const OperatorCommand& command, std::uint64_t now_us) {
  // One writer context: validation, publication and the audit append happen
  // under the same lock so command ids, seqs and audit order agree.
  std::unique_lock lock(mu_);
  CommandResponse r;
  r.command_id = next_command_id_++;

  AuditEntry entry;
  entry.t_us = now_us;
  entry.command_id = r.command_id;
  entry.source = "operator";
  entry.action = std::string(action_name(command));
  entry.command = Json(command);

  int status = 202;
  if (auto reason = validate(command, status)) {
    r.reason = *reason;
    r.http_status = status;
  } else {
    try {
      entry.seq = send_(GcsCommand{r.command_id, command}, now_us);
      r.accepted = true;
    } catch (const BackPressure&) {
      r.reason = "busy";
      r.http_status = 503;
    }
  }
  entry.accepted = r.accepted;
  entry.reason = r.reason;
  append(std::move(entry));
  return r;
}

void GroundStation::append(AuditEntry entry) {
  audit_.push_back(std::move(entry));
  if (audit_hook_) audit_hook_(audit_.back());
}

void GroundStation::on_snapshot(const SwarmSnapshot& snapshot, std::uint64_t now_us) {
  std::lock_guard lock(mu_);
  latest_ = snapshot;
  latest_rx_us_ = now_us;
}

void GroundStation::on_outcome(const CommandOutcome& outcome, std::uint64_t now_us) {
  std::lock_guard lock(mu_);
  AuditEntry entry;
  entry.t_us = now_us;
  entry.command_id = outcome.command_id;
  entry.source = "uav_result";
  entry.action = std::string(to_string(outcome.action));
  entry.accepted = outcome.accepted;
  entry.reason = outcome.reason;
  entry.uav = outcome.uav;
  append(std::move(entry));
}

std::optional<SwarmSnapshot> GroundStation::latest_snapshot() const {
  std::lock_guard lock(mu_);
  return latest_;
}

bool GroundStation::stale(std::uint64_t now_us) const {
  std::lock_guard lock(mu_);
  return !latest_rx_us_ || now_us - std::min(now_us, *latest_rx_us_) > stale_after_us_;
}

std::vector<AuditEntry> GroundStation::audit_since(std::uint64_t since) const {
  std::lock_guard lock(mu_);
  std::vector<AuditEntry> out;
  std::copy_if(audit_.begin(), audit_.end(), std::back_inserter(out),
               [since](const AuditEntry& e) { return e.command_id > since; });
  return out;
}

std::size_t GroundStation::audit_size() const {
  std::lock_guard lock(mu_);
  return audit_.size();
}

// --- SnapshotFeed ----------------------------------------------------------

Json feed_json(const FeedItem& item) {
  Json j = item.snapshot;
  j["stale"] = item.stale;
  return j;
}

SnapshotFeed::SnapshotFeed(std::uint64_t min_interval_us, std::uint64_t stale_after_us, std::uint64_t stale_period_us)
    : min_interval_us_(min_interval_us), stale_after_us_(stale_after_us), stale_period_us_(stale_period_us) {}

SnapshotFeed::ClientId SnapshotFeed::connect(std::uint64_t now_us) {
  std::lock_guard lock(mu_);
  const ClientId id = next_client_++;
  Client c;
  c.pending = latest_;
  c.connected_us = now_us;
  clients_.emplace(id, std::move(c));
  return id;
}

void SnapshotFeed::disconnect(ClientId client) {
  std::lock_guard lock(mu_);
  clients_.erase(client);
}

std::size_t SnapshotFeed::clients() const {
  std::lock_guard lock(mu_);
  return clients_.size();
}

void SnapshotFeed::publish(const SwarmSnapshot& snapshot, std::uint64_t now_us) {
  std::lock_guard lock(mu_);
  latest_ = snapshot;
  last_snapshot_us_ = now_us;
  for (auto& [id, c] : clients_) c.pending = snapshot;
}

std::optional<FeedItem> SnapshotFeed::poll(ClientId client, std::uint64_t now_us) {
  std::lock_guard lock(mu_);
  auto it = clients_.find(client);
  if (it == clients_.end()) return std::nullopt;
  Client& c = it->second;
  auto elapsed = [now_us](std::uint64_t since) { return now_us > since ? now_us - since : 0; };
  if (c.last_sent_us && elapsed(*c.last_sent_us) < min_interval_us_) return std::nullopt;

  if (c.pending) {
    FeedItem item{std::move(*c.pending), false};
    c.pending.reset();
    c.last_sent_us = now_us;
    return item;
  }
  const std::uint64_t silent_since = last_snapshot_us_.value_or(c.connected_us);
  if (elapsed(silent_since) < stale_after_us_) return std::nullopt;
  if (c.last_stale_us && *c.last_stale_us >= silent_since && elapsed(*c.last_stale_us) < stale_period_us_) {
    return std::nullopt;
  }
  c.last_stale_us = now_us;
  c.last_sent_us = now_us;
  FeedItem item;
  item.snapshot.timestamp_us = now_us;
  item.stale = true;
  return item;
}

}  // namespace swarmlink
