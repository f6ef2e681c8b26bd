#include <gtest/gtest.h>

#include "swarmlink/errors.hpp"
#include "swarmlink/verify.hpp"

using namespace swarmlink;

namespace {

Json config_record() {
  return Json{{"t_us", 0},          {"kind", "membership"},      {"event", "config"},
              {"dt_ms", 100},       {"heartbeat_period_ms", 500}, {"stale_after_missed", 3}};
}

Json telemetry(std::uint64_t t, std::uint32_t uav, double n, double e, double d, bool armed = true, bool airborne = true) {
  return Json{{"t_us", t}, {"kind", "telemetry"}, {"uav", uav},         {"n", n},
              {"e", e},    {"d", d},              {"yaw", 0.0},         {"armed", armed},
              {"airborne", airborne}};
}

Json line_snapshot(std::uint64_t t) {
  return Json{{"t_us", t},
              {"kind", "membership"},
              {"event", "snapshot"},
              {"node", 0},
              {"leader", 1},
              {"formation", {{"geometry", "line"}, {"spacing_m", 10.0}, {"altitude_offset_m", 0.0}}},
              {"members",
               {{{"id", 1}, {"role", {{"variant", "leader"}}}},
                {{"id", 2}, {"role", {{"variant", "follower"}, {"slot", 1}}}}}}};
}

Json transition(std::uint64_t t, std::uint32_t uav, const char* from, const char* to, const char* event) {
  return Json{{"t_us", t}, {"kind", "transition"}, {"uav", uav}, {"from", from},
              {"to", to},  {"event", event},       {"accepted", true}};
}

Json publish(std::uint64_t t, std::uint32_t node, const char* topic, std::uint64_t seq, bool reliable = false,
             std::vector<std::uint32_t> awaiting = {}) {
  return Json{{"t_us", t},      {"kind", "network"},    {"event", "publish"}, {"node", node},
              {"topic", topic}, {"publisher", node},   {"seq", seq},         {"reliable", reliable},
              {"awaiting", awaiting}};
}

Json deliver(std::uint64_t t, std::uint32_t reader, std::uint32_t publisher, const char* topic, std::uint64_t seq) {
  return Json{{"t_us", t},      {"kind", "network"},        {"event", "deliver"}, {"node", reader},
              {"topic", topic}, {"publisher", publisher}, {"seq", seq},         {"reliable", true},
              {"loopback", false}};
}

Json membership(std::uint64_t t, const char* event, std::uint32_t node, std::uint32_t uav) {
  return Json{{"t_us", t}, {"kind", "membership"}, {"event", event}, {"node", node}, {"uav", uav}};
}

Json dispatch(std::uint64_t t, std::uint32_t node, std::uint32_t uav, const char* action) {
  return Json{{"t_us", t}, {"kind", "command"}, {"stage", "dispatch"}, {"node", node}, {"uav", uav}, {"action", action}};
}

// Leader 1 at the origin facing north; line slot 1 sits 10 m to its left (west).
std::vector<Json> convergence_trace(double follower_error_m) {
  std::vector<Json> t{config_record(), line_snapshot(0)};
  for (std::uint64_t s = 0; s <= 40; ++s) {
    const auto us = s * 1'000'000;
    t.push_back(telemetry(us, 1, 0, 0, -10));
    t.push_back(telemetry(us, 2, follower_error_m, -10, -10));
  }
  return t;
}

std::vector<Json> leader_failover_trace(std::uint64_t elected_us) {
  std::vector<Json> t{config_record()};
  for (std::uint64_t us = 0; us <= 10'000'000; us += 500'000) t.push_back(publish(us, 1, "swarm/heartbeat", us / 500'000 + 1));
  t.push_back(membership(11'600'000, "leader_lost", 0, 1));
  t.push_back(membership(elected_us, "leader_elected", 0, 2));
  t.push_back(dispatch(elected_us, 0, 3, "set_setpoint"));
  return t;
}

std::vector<Json> takeover_trace(std::uint64_t assumed_us) {
  std::vector<Json> t{config_record()};
  std::uint64_t seq = 0;
  for (std::uint64_t us = 0; us <= 10'000'000; us += 100'000) t.push_back(publish(us, 0, "swarm/state", ++seq));
  t.push_back(Json{{"t_us", 10'000'000}, {"kind", "network"}, {"event", "fault"}, {"fault", "kill_uav"}, {"id", 0}});
  t.push_back(Json{{"t_us", assumed_us}, {"kind", "membership"}, {"event", "coordinator_assumed"}, {"node", 1}, {"id", 1}});
  return t;
}

std::vector<Json> writers_trace(std::uint64_t overlap_us) {
  std::vector<Json> t{config_record()};
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  for (std::uint64_t us = 0; us <= 10'000'000; us += 100'000) t.push_back(publish(us, 0, "swarm/state", ++a));
  for (std::uint64_t us = 10'000'000 - overlap_us; us <= 20'000'000; us += 100'000) t.push_back(publish(us, 1, "swarm/state", ++b));
  return t;
}

}  // namespace

TEST(FormationConvergence, PassesOnSlotAndFailsOffSlot) {
  auto ok = check_formation_convergence(convergence_trace(0.0));
  EXPECT_TRUE(ok.passed) << to_json_value(ok).dump();
  EXPECT_EQ(ok.metrics.at("max_error_m"), 0.0);

  auto bad = check_formation_convergence(convergence_trace(0.6));
  EXPECT_FALSE(bad.passed);
  EXPECT_NEAR(bad.metrics.at("max_error_m").get<double>(), 0.6, 1e-12);

  ConvergenceOptions loose;
  loose.threshold_m = 0.7;
  EXPECT_TRUE(check_formation_convergence(convergence_trace(0.6), loose).passed);
}

TEST(FormationConvergence, EmptyTraceHasNothingToCheck) {
  const auto r = check_formation_convergence({config_record()});
  EXPECT_FALSE(r.passed);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0], "no follower samples to check");
}

TEST(FailoverBound, LeaderReplacementWithinMissedPlusOnePeriods) {
  // Last heartbeat 10.0 s; bound (3 + 1) x 0.5 s = 2.0 s.
  EXPECT_TRUE(check_failover_bound(leader_failover_trace(11'600'000)).passed);
  EXPECT_TRUE(check_failover_bound(leader_failover_trace(12'000'000)).passed);
  EXPECT_FALSE(check_failover_bound(leader_failover_trace(12'100'000)).passed);
  auto no_setpoint = leader_failover_trace(11'600'000);
  no_setpoint.pop_back();
  EXPECT_FALSE(check_failover_bound(no_setpoint).passed);
}

TEST(FailoverBound, TakeoverWithinFourPeriodsPlusOneTick) {
  EXPECT_TRUE(check_failover_bound(takeover_trace(12'100'000)).passed);
  EXPECT_FALSE(check_failover_bound(takeover_trace(12'200'000)).passed);
  auto none = takeover_trace(0);
  none.pop_back();
  EXPECT_FALSE(check_failover_bound(none).passed);
  EXPECT_FALSE(check_failover_bound({config_record()}).passed);
}

TEST(FsmSafety, AcceptsALegalFlight) {
  const std::vector<Json> t{
      config_record(),
      transition(1, 1, "init", "connected", "link_up"),
      transition(2, 1, "connected", "armed", "arm_cmd"),
      transition(3, 1, "armed", "taking_off", "takeoff_cmd"),
      transition(4, 1, "taking_off", "hold", "takeoff_complete"),
      transition(5, 1, "hold", "landing", "land_cmd"),
      transition(6, 1, "landing", "armed", "touchdown_detected"),
      transition(7, 1, "armed", "disarmed", "disarm_cmd"),
  };
  const auto r = check_fsm_safety(t);
  EXPECT_TRUE(r.passed) << to_json_value(r).dump();
}

TEST(FsmSafety, FlagsIllegalAndDiscontinuousTransitions) {
  std::vector<Json> t{config_record(), transition(1, 1, "init", "connected", "link_up"),
                      transition(2, 1, "connected", "offboard", "arm_cmd")};
  EXPECT_FALSE(check_fsm_safety(t).passed);
  t = {config_record(), transition(1, 1, "init", "connected", "link_up"), transition(2, 1, "armed", "taking_off", "takeoff_cmd")};
  EXPECT_FALSE(check_fsm_safety(t).passed);
}

TEST(FsmSafety, FlagsDisarmedWhileAirborne) {
  EXPECT_FALSE(check_fsm_safety({config_record(), telemetry(1, 1, 0, 0, -5, false, true)}).passed);
  EXPECT_TRUE(check_fsm_safety({config_record(), telemetry(1, 1, 0, 0, 0, false, false)}).passed);
}

TEST(FsmSafety, RejectionMustBeOneTheTableRejects) {
  const Json rejected{{"t_us", 2}, {"kind", "transition"}, {"uav", 1}, {"state", "connected"}, {"event", "takeoff_cmd"}, {"accepted", false}};
  EXPECT_TRUE(check_fsm_safety({config_record(), transition(1, 1, "init", "connected", "link_up"), rejected}).passed);
  Json wrong = rejected;
  wrong["event"] = "arm_cmd";
  EXPECT_FALSE(check_fsm_safety({config_record(), transition(1, 1, "init", "connected", "link_up"), wrong}).passed);
}

TEST(SingleWriter, OverlapUpToOnePeriodIsNotedNotFailed) {
  const auto handoff = check_single_writer(writers_trace(0));
  EXPECT_TRUE(handoff.passed);
  const auto race = check_single_writer(writers_trace(400'000));
  EXPECT_TRUE(race.passed);
  EXPECT_EQ(race.notes.size(), 1u);
  EXPECT_EQ(race.metrics.at("flagged_overlaps"), 1);
  EXPECT_FALSE(check_single_writer(writers_trace(1'000'000)).passed);
  EXPECT_FALSE(check_single_writer({config_record()}).passed);
}

TEST(ReliableDelivery, ExactlyOnceInOrder) {
  std::vector<Json> t{config_record()};
  for (std::uint64_t s = 1; s <= 5; ++s) {
    t.push_back(publish(s * 100'000, 0, "uav/1/cmd", s, true, {1}));
    t.push_back(deliver(s * 100'000 + 20'000, 1, 0, "uav/1/cmd", s));
  }
  t.push_back(Json{{"t_us", 10'000'000}, {"kind", "network"}, {"event", "tick"}});
  EXPECT_TRUE(check_reliable_delivery(t).passed);

  auto lost = t;
  lost.erase(lost.begin() + 4);  // delivery of seq 2
  EXPECT_FALSE(check_reliable_delivery(lost).passed);

  auto dup = t;
  dup.insert(dup.begin() + 5, deliver(220'000, 1, 0, "uav/1/cmd", 2));
  EXPECT_FALSE(check_reliable_delivery(dup).passed);

  auto reordered = t;
  std::swap(reordered[2], reordered[4]);
  EXPECT_FALSE(check_reliable_delivery(reordered).passed);
}

TEST(ReliableDelivery, KilledReaderAndTraceTailAreExcused) {
  std::vector<Json> t{config_record(), publish(100'000, 0, "uav/1/cmd", 1, true, {1})};
  t.push_back(Json{{"t_us", 200'000}, {"kind", "network"}, {"event", "fault"}, {"fault", "kill_uav"}, {"id", 1}});
  t.push_back(Json{{"t_us", 10'000'000}, {"kind", "network"}, {"event", "tick"}});
  EXPECT_FALSE(check_reliable_delivery(t).passed);  // excused, but then nothing is left to check
  t.push_back(publish(9'000'000, 0, "uav/2/cmd", 1, true, {2}));
  t.push_back(publish(1'000'000, 0, "uav/3/cmd", 1, true, {3}));
  t.push_back(deliver(1'050'000, 3, 0, "uav/3/cmd", 1));
  EXPECT_TRUE(check_reliable_delivery(t).passed) << to_json_value(check_reliable_delivery(t)).dump();
}

TEST(RunCheck, DispatchesByName) {
  const auto names = check_names();
  EXPECT_EQ(names.size(), 5u);
  for (const auto& n : names) EXPECT_EQ(run_check(n, {config_record()}).name, n);
  EXPECT_THROW(run_check("vibes", {}), InvalidArgument);
}
