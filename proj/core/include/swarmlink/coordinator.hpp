#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "swarmlink/messages.hpp"
#include "swarmlink/model.hpp"

namespace swarmlink {

/// LowestId when `pinned` is empty.
struct LeaderPolicy {
  std::optional<UavId> pinned;

  static LeaderPolicy lowest_id() noexcept { return {}; }
  static LeaderPolicy pinned_to(UavId id) noexcept { return {id}; }

  friend bool operator==(const LeaderPolicy&, const LeaderPolicy&) = default;
};

/// "lowest_id" or "pinned:<id>".
std::string to_string(const LeaderPolicy& policy);
std::optional<LeaderPolicy> leader_policy_from_string(std::string_view text);

struct MembershipConfig {
  std::uint32_t heartbeat_period_ms = 500;
  std::uint32_t stale_after_missed = 3;
  LeaderPolicy leader_policy;

  /// Throws InvalidArgument.
  void validate() const;

  std::uint64_t heartbeat_period_us() const noexcept { return std::uint64_t{heartbeat_period_ms} * 1000; }
  /// A member is expired once silent for strictly longer than this.
  std::uint64_t stale_after_us() const noexcept { return heartbeat_period_us() * stale_after_missed; }
  /// Silence on swarm/state after which a UAV may take over coordination.
  std::uint64_t takeover_silence_us() const noexcept { return heartbeat_period_us() * 4; }
};

struct MemberRecord {
  UavId id;
  UavClass uav_class = UavClass::Generic;
  MissionState mission_state = MissionState::Init;
  Pose pose;
  std::uint64_t pose_sample_us = 0;  // when `pose` was true
  std::uint64_t last_seen_us = 0;    // local receive time
  std::uint64_t last_seq = 0;
  std::optional<Velocity> velocity;  // finite difference of the last two samples
};

enum class MembershipDelta { Joined, Updated, Stale };

struct ExpiryResult {
  std::vector<UavId> expired;
  std::optional<UavId> lost_leader;
};

class Registry {
 public:
  /// Throws ProtocolViolation for id 0. Heartbeats older than the newest seen
  /// (by seq) are ignored and reported as Stale.
  MembershipDelta ingest_heartbeat(const Heartbeat& hb, std::uint64_t now_us, std::uint64_t sample_us);
  MembershipDelta ingest_heartbeat(const Heartbeat& hb, std::uint64_t now_us) {
    return ingest_heartbeat(hb, now_us, now_us);
  }

  /// Removes members silent for more than the stale threshold. Clears the
  /// leader if it was among them.
  ExpiryResult expire_members(std::uint64_t now_us, const MembershipConfig& cfg);

  std::optional<UavId> leader() const noexcept { return leader_; }
  void set_leader(std::optional<UavId> leader) noexcept { leader_ = leader; }

  const std::map<UavId, MemberRecord>& members() const noexcept { return members_; }
  const MemberRecord* find(UavId id) const;
  bool contains(UavId id) const { return members_.contains(id); }
  std::vector<UavId> ids() const;
  std::size_t size() const noexcept { return members_.size(); }

 private:
  std::map<UavId, MemberRecord> members_;
  std::optional<UavId> leader_;
};

/// Hold and Offboard members may lead.
bool is_leader_eligible(MissionState state) noexcept;

/// Pure function of the registry contents: the pinned id if present and
/// eligible, otherwise the smallest eligible id.
std::optional<UavId> elect_leader(const Registry& registry, const MembershipConfig& cfg);

/// True iff swarm/state has been silent for more than 4 heartbeat periods
/// and `self` has the lowest id among the registry's members (plus itself).
bool assume_coordinator(UavId self, const Registry& registry, std::uint64_t observed_silence_us,
                        const MembershipConfig& cfg);

struct CoordinatorConfig {
  MembershipConfig membership;
  std::uint64_t tick_period_us = 200'000;
  /// Follower targets are computed from the leader pose dead-reckoned to
  /// now + lead, which absorbs the command latency and the tick interval.
  std::uint64_t leader_lead_us = 250'000;
  std::uint64_t max_extrapolation_us = 1'000'000;
};

struct MembershipEvent {
  enum class Kind { Joined, Expired, LeaderElected, LeaderLost };
  Kind kind;
  UavId id;

  friend bool operator==(const MembershipEvent&, const MembershipEvent&) = default;
};

std::string_view to_string(MembershipEvent::Kind kind) noexcept;

struct OutgoingCommand {
  UavId to;
  UavCommand command;

  friend bool operator==(const OutgoingCommand&, const OutgoingCommand&) = default;
};

struct OutgoingGimbal {
  UavId to;
  GimbalCommand command;
};

struct Dispatch {
  std::vector<OutgoingCommand> commands;
  std::vector<OutgoingGimbal> gimbal;
};

struct TickOutput {
  std::vector<MembershipEvent> events;
  std::vector<OutgoingCommand> commands;
  SwarmSnapshot snapshot;
};

/// The coordinator role: membership, leader election, slot assignment and
/// setpoint fan-out. Single-threaded; the owning node feeds it heartbeats
/// and operator commands and calls tick() at the configured cadence.
class Coordinator {
 public:
  explicit Coordinator(CoordinatorConfig config = {});

  const CoordinatorConfig& config() const noexcept { return config_; }

  MembershipDelta ingest_heartbeat(const Heartbeat& hb, std::uint64_t now_us, std::uint64_t sample_us);

  /// Applies an operator command; returns the per-UAV messages it fans out to.
  Dispatch handle_operator(const GcsCommand& command);

  /// Adopts formation and leader from another coordinator's snapshot, so a
  /// standby copy can take over without reshuffling the swarm.
  void adopt(const SwarmSnapshot& snapshot);

  /// Expires members only; used by standby copies between snapshots.
  std::vector<MembershipEvent> expire(std::uint64_t now_us);

  /// expire -> elect if needed -> assign slots -> offsets -> setpoints -> snapshot.
  TickOutput tick(std::uint64_t now_us);

  /// Runs tick() when the cadence is due.
  std::optional<TickOutput> maybe_tick(std::uint64_t now_us);

  const Registry& registry() const noexcept { return registry_; }
  const std::optional<FormationSpec>& formation() const noexcept { return formation_; }
  const std::optional<Setpoint>& leader_waypoint() const noexcept { return waypoint_; }
  const LeaderPolicy& leader_policy() const noexcept { return config_.membership.leader_policy; }
  const std::map<UavId, std::uint32_t>& slots() const noexcept { return slots_; }

  /// Leader pose extrapolated to `at_us` from its last two heartbeats.
  std::optional<Pose> predicted_leader_pose(std::uint64_t at_us) const;

 private:
  bool needs_election() const;
  SwarmSnapshot build_snapshot(std::uint64_t now_us) const;

  CoordinatorConfig config_;
  Registry registry_;
  std::optional<FormationSpec> formation_;
  std::uint64_t formation_command_id_ = 0;
  std::optional<Setpoint> waypoint_;
  std::uint64_t waypoint_command_id_ = 0;
  std::map<UavId, std::uint32_t> slots_;
  std::set<UavId> held_;  // Offboard members already sent Hold for lack of a leader
  std::vector<MembershipEvent> pending_;
  std::optional<std::uint64_t> next_tick_us_;
};

}  // namespace swarmlink
