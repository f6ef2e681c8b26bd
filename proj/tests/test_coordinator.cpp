#include <gtest/gtest.h>

#include <algorithm>

#include "swarmlink/coordinator.hpp"
#include "swarmlink/errors.hpp"
#include "swarmlink/formation.hpp"

using namespace swarmlink;

namespace {

Heartbeat hb(std::uint32_t id, MissionState state, std::uint64_t seq, Vec3 pos = {}) {
  Heartbeat h;
  h.id = UavId(id);
  h.mission_state = state;
  h.seq = seq;
  h.pose.position = pos;
  return h;
}

bool has_event(const TickOutput& out, MembershipEvent::Kind kind, std::uint32_t id) {
  return std::find(out.events.begin(), out.events.end(), MembershipEvent{kind, UavId(id)}) != out.events.end();
}

std::vector<UavId> setpoint_targets(const TickOutput& out) {
  std::vector<UavId> ids;
  for (const auto& c : out.commands) {
    if (c.command.action == UavAction::SetSetpoint) ids.push_back(c.to);
  }
  return ids;
}

}  // namespace

TEST(Registry, StaleSeqIsIgnored) {
  Registry r;
  EXPECT_EQ(r.ingest_heartbeat(hb(1, MissionState::Hold, 5), 100), MembershipDelta::Joined);
  EXPECT_EQ(r.ingest_heartbeat(hb(1, MissionState::Offboard, 6), 200), MembershipDelta::Updated);
  EXPECT_EQ(r.ingest_heartbeat(hb(1, MissionState::Landing, 4), 300), MembershipDelta::Stale);
  EXPECT_EQ(r.find(UavId(1))->mission_state, MissionState::Offboard);
  EXPECT_EQ(r.find(UavId(1))->last_seen_us, 200u);
}

TEST(Registry, ExpiryIsStrictlyAfterThreshold) {
  MembershipConfig cfg;  // 500 ms x 3
  Registry r;
  r.ingest_heartbeat(hb(1, MissionState::Hold, 1), 0);
  r.set_leader(UavId(1));
  EXPECT_TRUE(r.expire_members(1'500'000, cfg).expired.empty());
  const auto res = r.expire_members(1'500'001, cfg);
  EXPECT_EQ(res.expired, std::vector<UavId>{UavId(1)});
  EXPECT_EQ(res.lost_leader, UavId(1));
  EXPECT_FALSE(r.leader());
}

TEST(Election, LowestEligibleIdOrEligiblePin) {
  Registry r;
  r.ingest_heartbeat(hb(4, MissionState::Hold, 1), 0);
  r.ingest_heartbeat(hb(2, MissionState::TakingOff, 1), 0);
  r.ingest_heartbeat(hb(3, MissionState::Offboard, 1), 0);
  MembershipConfig cfg;
  EXPECT_EQ(elect_leader(r, cfg), UavId(3));
  cfg.leader_policy = LeaderPolicy::pinned_to(UavId(4));
  EXPECT_EQ(elect_leader(r, cfg), UavId(4));
  cfg.leader_policy = LeaderPolicy::pinned_to(UavId(2));  // not eligible yet
  EXPECT_EQ(elect_leader(r, cfg), UavId(3));
  EXPECT_FALSE(elect_leader(Registry{}, cfg));
}

TEST(Election, PolicyText) {
  EXPECT_EQ(to_string(LeaderPolicy::lowest_id()), "lowest_id");
  EXPECT_EQ(to_string(LeaderPolicy::pinned_to(UavId(3))), "pinned:3");
  EXPECT_EQ(leader_policy_from_string("pinned:12"), LeaderPolicy::pinned_to(UavId(12)));
  EXPECT_FALSE(leader_policy_from_string("pinned:0"));
  EXPECT_FALSE(leader_policy_from_string("highest"));
}

TEST(AssumeCoordinator, LowestIdAfterFourSilentPeriods) {
  MembershipConfig cfg;
  Registry r;
  r.ingest_heartbeat(hb(2, MissionState::Hold, 1), 0);
  r.ingest_heartbeat(hb(3, MissionState::Hold, 1), 0);
  EXPECT_FALSE(assume_coordinator(UavId(2), r, 2'000'000, cfg));
  EXPECT_TRUE(assume_coordinator(UavId(2), r, 2'000'001, cfg));
  EXPECT_FALSE(assume_coordinator(UavId(3), r, 5'000'000, cfg));
  EXPECT_TRUE(assume_coordinator(UavId(1), r, 2'000'001, cfg));  // self need not be registered
}

// Hand trace: period 500 ms, missed 3, ticks every 200 ms from t = 0. The
// leader's last heartbeat is at 10.0 s; it is expired at the first tick with
// silence > 1.5 s, i.e. 11.6 s, which is inside the 2.0 s bound.
TEST(Coordinator, FailoverHandTrace) {
  Coordinator c;
  c.handle_operator(GcsCommand{1, op::SetFormation{{Geometry::Line, 10, 0}}});
  std::uint64_t seq = 0;
  std::optional<std::uint64_t> lost_at;
  std::optional<std::uint64_t> elected_at;
  std::optional<std::uint64_t> first_setpoint_at;
  for (std::uint64_t t = 0; t <= 14'000'000; t += 100'000) {
    if (t % 500'000 == 0) {
      ++seq;
      if (t <= 10'000'000) c.ingest_heartbeat(hb(1, MissionState::Offboard, seq, {0, 0, -10}), t, t);
      c.ingest_heartbeat(hb(2, MissionState::Offboard, seq, {0, -10, -10}), t, t);
      c.ingest_heartbeat(hb(3, MissionState::Offboard, seq, {0, 10, -10}), t, t);
    }
    auto out = c.maybe_tick(t);
    if (!out) continue;
    if (t < 11'600'000) {
      EXPECT_EQ(out->snapshot.leader, UavId(1)) << t;
      continue;
    }
    if (has_event(*out, MembershipEvent::Kind::LeaderLost, 1)) lost_at = t;
    if (has_event(*out, MembershipEvent::Kind::LeaderElected, 2)) elected_at = t;
    const auto targets = setpoint_targets(*out);
    if (!first_setpoint_at && elected_at && std::find(targets.begin(), targets.end(), UavId(3)) != targets.end()) {
      first_setpoint_at = t;
    }
  }
  EXPECT_EQ(lost_at, 11'600'000u);
  EXPECT_EQ(elected_at, 11'600'000u);
  EXPECT_EQ(first_setpoint_at, 11'600'000u);
  EXPECT_LE(*first_setpoint_at, 10'000'000u + 4 * 500'000u);
  EXPECT_EQ(c.slots().at(UavId(3)), 1u);
  EXPECT_FALSE(c.slots().contains(UavId(1)));
}

TEST(Coordinator, FollowerSetpointsFollowOffsetsFromLeader) {
  CoordinatorConfig cfg;
  cfg.leader_lead_us = 0;
  Coordinator c(cfg);
  c.handle_operator(GcsCommand{1, op::SetFormation{{Geometry::Wedge, 10, 0}}});
  c.ingest_heartbeat(hb(1, MissionState::Offboard, 1, {100, 0, -10}), 0, 0);
  c.ingest_heartbeat(hb(2, MissionState::Offboard, 1), 0, 0);
  c.ingest_heartbeat(hb(5, MissionState::Offboard, 1), 0, 0);
  const auto out = c.tick(0);
  ASSERT_EQ(out.commands.size(), 2u);
  const auto& first = out.commands[0];
  EXPECT_EQ(first.to, UavId(2));
  EXPECT_EQ(first.command.setpoint->position, (Vec3{90, -10, -10}));
  EXPECT_EQ(out.commands[1].command.setpoint->position, (Vec3{90, 10, -10}));
  EXPECT_EQ(first.command.command_id, 1u);
  EXPECT_FALSE(out.snapshot.validate());
  EXPECT_EQ(out.snapshot.find(UavId(5))->role, SwarmRole::follower(2));
}

TEST(Coordinator, IneligibleLeaderIsReplaced) {
  Coordinator d;
  d.ingest_heartbeat(hb(2, MissionState::TakingOff, 1), 0, 0);
  d.ingest_heartbeat(hb(3, MissionState::Offboard, 1), 0, 0);
  auto first = d.tick(0);
  EXPECT_EQ(first.snapshot.leader, UavId(3));
  d.ingest_heartbeat(hb(3, MissionState::Landing, 2), 100, 100);
  d.ingest_heartbeat(hb(2, MissionState::Offboard, 2), 100, 100);
  auto second = d.tick(100);
  EXPECT_EQ(second.snapshot.leader, UavId(2));
}

TEST(Coordinator, FanOutToEveryMember) {
  Coordinator c;
  for (std::uint32_t id : {3u, 1u, 2u}) c.ingest_heartbeat(hb(id, MissionState::Connected, 1), 0, 0);
  const auto d = c.handle_operator(GcsCommand{7, op::ArmAll{}});
  ASSERT_EQ(d.commands.size(), 3u);
  for (const auto& oc : d.commands) {
    EXPECT_EQ(oc.command.action, UavAction::Arm);
    EXPECT_EQ(oc.command.command_id, 7u);
  }
  const auto g = c.handle_operator(GcsCommand{8, op::GimbalPoint{UavId(2), {1, 2, 3}}});
  ASSERT_EQ(g.gimbal.size(), 1u);
  EXPECT_EQ(g.gimbal[0].to, UavId(2));
}

TEST(Coordinator, StickyLeaderUntilPinnedOneIsEligible) {
  Coordinator c;
  c.ingest_heartbeat(hb(1, MissionState::Hold, 1), 0, 0);
  c.ingest_heartbeat(hb(2, MissionState::Hold, 1), 0, 0);
  EXPECT_EQ(c.tick(0).snapshot.leader, UavId(1));
  c.handle_operator(GcsCommand{1, op::SetLeader{UavId(2)}});
  const auto out = c.tick(200'000);
  EXPECT_EQ(out.snapshot.leader, UavId(2));
  EXPECT_TRUE(has_event(out, MembershipEvent::Kind::LeaderLost, 1));
  EXPECT_TRUE(has_event(out, MembershipEvent::Kind::LeaderElected, 2));
  c.ingest_heartbeat(hb(3, MissionState::Hold, 1), 300'000, 300'000);
  EXPECT_EQ(c.tick(400'000).snapshot.leader, UavId(2));
}

TEST(Coordinator, LeaderPoseIsDeadReckoned) {
  Coordinator c;
  c.ingest_heartbeat(hb(1, MissionState::Offboard, 1, {0, 0, -10}), 0, 0);
  c.ingest_heartbeat(hb(1, MissionState::Offboard, 2, {2, 0, -10}), 500'000, 500'000);
  c.tick(500'000);
  const auto p = c.predicted_leader_pose(750'000);
  ASSERT_TRUE(p);
  EXPECT_NEAR(p->position.x, 3.0, 1e-9);  // 4 m/s for 0.25 s
  const auto capped = c.predicted_leader_pose(10'000'000);
  EXPECT_NEAR(capped->position.x, 6.0, 1e-9);  // extrapolation capped at 1 s
}

TEST(MembershipConfig, Validation) {
  MembershipConfig m;
  EXPECT_NO_THROW(m.validate());
  m.heartbeat_period_ms = 0;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = {};
  m.stale_after_missed = 0;
  EXPECT_THROW(m.validate(), InvalidArgument);
}
