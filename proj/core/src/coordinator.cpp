#include "swarmlink/coordinator.hpp"

#include <algorithm>
#include <charconv>

#include "swarmlink/errors.hpp"
#include "swarmlink/formation.hpp"

namespace swarmlink {

std::string to_string(const LeaderPolicy& policy) {
  return policy.pinned ? "pinned:" + std::to_string(policy.pinned->value()) : "lowest_id";
}

std::optional<LeaderPolicy> leader_policy_from_string(std::string_view text) {
  if (text == "lowest_id") return LeaderPolicy::lowest_id();
  constexpr std::string_view prefix = "pinned:";
  if (text.substr(0, prefix.size()) != prefix) return std::nullopt;
  const auto digits = text.substr(prefix.size());
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || value == 0 || value > 65535) return std::nullopt;
  return LeaderPolicy::pinned_to(UavId(value));
}

void MembershipConfig::validate() const {
  if (heartbeat_period_ms == 0) throw InvalidArgument("heartbeat_period_ms must be > 0");
  if (stale_after_missed < 1) throw InvalidArgument("stale_after_missed must be >= 1");
}

// --- Registry --------------------------------------------------------------

MembershipDelta Registry::ingest_heartbeat(const Heartbeat& hb, std::uint64_t now_us, std::uint64_t sample_us) {
  if (!hb.id.valid()) throw ProtocolViolation("heartbeat from reserved id 0");
  auto it = members_.find(hb.id);
  if (it == members_.end()) {
    members_.emplace(hb.id, MemberRecord{hb.id, hb.uav_class, hb.mission_state, hb.pose, sample_us, now_us, hb.seq, {}});
    return MembershipDelta::Joined;
  }
  MemberRecord& m = it->second;
  if (hb.seq <= m.last_seq) return MembershipDelta::Stale;

  constexpr std::uint64_t kMaxDifferenceInterval = 2'000'000;
  if (sample_us > m.pose_sample_us && sample_us - m.pose_sample_us <= kMaxDifferenceInterval) {
    const double dt = static_cast<double>(sample_us - m.pose_sample_us) * 1e-6;
    m.velocity = (hb.pose.position - m.pose.position) * (1.0 / dt);
  } else {
    m.velocity.reset();
  }
  m.uav_class = hb.uav_class;
  m.mission_state = hb.mission_state;
  m.pose = hb.pose;
  m.pose_sample_us = sample_us;
  m.last_seen_us = std::max(m.last_seen_us, now_us);
  m.last_seq = hb.seq;
  return MembershipDelta::Updated;
}

ExpiryResult Registry::expire_members(std::uint64_t now_us, const MembershipConfig& cfg) {
  ExpiryResult result;
  const std::uint64_t threshold = cfg.stale_after_us();
  for (auto it = members_.begin(); it != members_.end();) {
    const std::uint64_t silent = now_us > it->second.last_seen_us ? now_us - it->second.last_seen_us : 0;
    if (silent > threshold) {
      result.expired.push_back(it->first);
      if (leader_ == it->first) {
        result.lost_leader = leader_;
        leader_.reset();
      }
      it = members_.erase(it);
    } else {
      ++it;
    }
  }
  return result;
}

const MemberRecord* Registry::find(UavId id) const {
  auto it = members_.find(id);
  return it == members_.end() ? nullptr : &it->second;
}

std::vector<UavId> Registry::ids() const {
  std::vector<UavId> out;
  out.reserve(members_.size());
  for (const auto& [id, _] : members_) out.push_back(id);
  return out;
}

// --- Election --------------------------------------------------------------

bool is_leader_eligible(MissionState state) noexcept {
  return state == MissionState::Hold || state == MissionState::Offboard;
}

std::optional<UavId> elect_leader(const Registry& registry, const MembershipConfig& cfg) {
  if (cfg.leader_policy.pinned) {
    const auto* m = registry.find(*cfg.leader_policy.pinned);
    if (m && is_leader_eligible(m->mission_state)) return m->id;
  }
  for (const auto& [id, m] : registry.members()) {  // ascending id
    if (is_leader_eligible(m.mission_state)) return id;
  }
  return std::nullopt;
}

bool assume_coordinator(UavId self, const Registry& registry, std::uint64_t observed_silence_us,
                        const MembershipConfig& cfg) {
  if (observed_silence_us <= cfg.takeover_silence_us()) return false;
  return registry.members().empty() || self <= registry.members().begin()->first;
}

std::string_view to_string(MembershipEvent::Kind kind) noexcept {
  switch (kind) {
    case MembershipEvent::Kind::Joined: return "joined";
    case MembershipEvent::Kind::Expired: return "expired";
    case MembershipEvent::Kind::LeaderElected: return "leader_elected";
    case MembershipEvent::Kind::LeaderLost: return "leader_lost";
  }
  return "joined";
}

// --- Coordinator -----------------------------------------------------------

Coordinator::Coordinator(CoordinatorConfig config) : config_(std::move(config)) {
  config_.membership.validate();
  if (config_.tick_period_us == 0) throw InvalidArgument("coordinator tick period must be > 0");
}

MembershipDelta Coordinator::ingest_heartbeat(const Heartbeat& hb, std::uint64_t now_us, std::uint64_t sample_us) {
  const auto delta = registry_.ingest_heartbeat(hb, now_us, sample_us);
  if (delta == MembershipDelta::Joined) pending_.push_back({MembershipEvent::Kind::Joined, hb.id});
  return delta;
}

Dispatch Coordinator::handle_operator(const GcsCommand& command) {
  Dispatch out;
  const auto id = command.command_id;
  auto to_all = [&](UavAction action) {
    for (UavId member : registry_.ids()) out.commands.push_back({member, UavCommand{action, std::nullopt, id}});
  };
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, op::ArmAll>) {
          to_all(UavAction::Arm);
        } else if constexpr (std::is_same_v<T, op::TakeoffAll>) {
          to_all(UavAction::Takeoff);
        } else if constexpr (std::is_same_v<T, op::EngageOffboardAll>) {
          to_all(UavAction::Offboard);
        } else if constexpr (std::is_same_v<T, op::RtlAll>) {
          to_all(UavAction::Rtl);
        } else if constexpr (std::is_same_v<T, op::LandAll>) {
          to_all(UavAction::Land);
        } else if constexpr (std::is_same_v<T, op::SetFormation>) {
          if (c.spec.valid()) {
            formation_ = c.spec;
            formation_command_id_ = id;
          }
        } else if constexpr (std::is_same_v<T, op::SetLeader>) {
          config_.membership.leader_policy = LeaderPolicy::pinned_to(c.id);
        } else if constexpr (std::is_same_v<T, op::LeaderWaypoint>) {
          waypoint_ = c.setpoint;
          waypoint_command_id_ = id;
        } else if constexpr (std::is_same_v<T, op::ForUav>) {
          UavCommand forwarded = c.command;
          forwarded.command_id = id;
          out.commands.push_back({c.id, std::move(forwarded)});
        } else if constexpr (std::is_same_v<T, op::GimbalPoint>) {
          out.gimbal.push_back({c.id, GimbalCommand{c.target, id}});
        }
      },
      command.command);
  return out;
}

void Coordinator::adopt(const SwarmSnapshot& snapshot) {
  formation_ = snapshot.formation;
  if (snapshot.leader && registry_.contains(*snapshot.leader)) registry_.set_leader(snapshot.leader);
}

std::vector<MembershipEvent> Coordinator::expire(std::uint64_t now_us) {
  std::vector<MembershipEvent> events;
  const auto result = registry_.expire_members(now_us, config_.membership);
  for (UavId id : result.expired) events.push_back({MembershipEvent::Kind::Expired, id});
  if (result.lost_leader) events.push_back({MembershipEvent::Kind::LeaderLost, *result.lost_leader});
  return events;
}

bool Coordinator::needs_election() const {
  const auto leader = registry_.leader();
  if (!leader) return true;
  const auto* m = registry_.find(*leader);
  if (!m || !is_leader_eligible(m->mission_state)) return true;
  const auto& pinned = config_.membership.leader_policy.pinned;
  if (pinned && *pinned != *leader) {
    const auto* p = registry_.find(*pinned);
    return p && is_leader_eligible(p->mission_state);
  }
  return false;
}

std::optional<Pose> Coordinator::predicted_leader_pose(std::uint64_t at_us) const {
  const auto leader = registry_.leader();
  if (!leader) return std::nullopt;
  const auto* m = registry_.find(*leader);
  if (!m) return std::nullopt;
  Pose p = m->pose;
  if (m->velocity && at_us > m->pose_sample_us) {
    const auto horizon = std::min(at_us - m->pose_sample_us, config_.max_extrapolation_us);
    p.position += *m->velocity * (static_cast<double>(horizon) * 1e-6);
  }
  return p;
}

TickOutput Coordinator::tick(std::uint64_t now_us) {
  TickOutput out;
  out.events = std::move(pending_);
  pending_.clear();
  for (auto& e : expire(now_us)) out.events.push_back(e);

  if (needs_election()) {
    const auto previous = registry_.leader();
    const auto elected = elect_leader(registry_, config_.membership);
    if (previous && previous != elected) out.events.push_back({MembershipEvent::Kind::LeaderLost, *previous});
    registry_.set_leader(elected);
    if (elected && elected != previous) out.events.push_back({MembershipEvent::Kind::LeaderElected, *elected});
  }

  const auto leader = registry_.leader();
  slots_ = leader ? assign_slots(registry_.ids(), *leader) : std::map<UavId, std::uint32_t>{};

  auto in_offboard = [&](UavId id) {
    const auto* m = registry_.find(id);
    return m && m->mission_state == MissionState::Offboard;
  };

  if (leader) {
    held_.clear();
    if (waypoint_ && in_offboard(*leader)) {
      out.commands.push_back({*leader, UavCommand{UavAction::SetSetpoint, waypoint_, waypoint_command_id_}});
    }
    if (formation_ && !slots_.empty()) {
      const auto offsets = compute_formation_offsets(*formation_, slots_.size());
      const Pose target = *predicted_leader_pose(now_us + config_.leader_lead_us);
      for (const auto& [id, slot] : slots_) {
        if (!in_offboard(id)) continue;
        out.commands.push_back(
            {id, UavCommand{UavAction::SetSetpoint, follower_setpoint(target, offsets[slot - 1]), formation_command_id_}});
      }
    }
  } else {
    for (UavId id : registry_.ids()) {
      if (in_offboard(id) && held_.insert(id).second) {
        out.commands.push_back({id, UavCommand{UavAction::Hold, std::nullopt, 0}});
      }
    }
  }

  out.snapshot = build_snapshot(now_us);
  if (auto err = out.snapshot.validate()) throw InvariantViolation("coordinator produced invalid snapshot: " + *err);
  return out;
}

std::optional<TickOutput> Coordinator::maybe_tick(std::uint64_t now_us) {
  if (next_tick_us_ && now_us < *next_tick_us_) return std::nullopt;
  if (!next_tick_us_) next_tick_us_ = now_us;
  while (*next_tick_us_ <= now_us) *next_tick_us_ += config_.tick_period_us;
  return tick(now_us);
}

SwarmSnapshot Coordinator::build_snapshot(std::uint64_t now_us) const {
  SwarmSnapshot s;
  s.timestamp_us = now_us;
  s.formation = formation_;
  s.leader = registry_.leader();
  for (const auto& [id, m] : registry_.members()) {
    MemberView v;
    v.id = id;
    v.uav_class = m.uav_class;
    v.mission_state = m.mission_state;
    v.pose = m.pose;
    v.last_seen_us = m.last_seen_us;
    if (s.leader == id) {
      v.role = SwarmRole::leader();
    } else if (auto slot = slots_.find(id); slot != slots_.end()) {
      v.role = SwarmRole::follower(slot->second);
    }
    s.members.push_back(v);
  }
  return s;
}

}  // namespace swarmlink
