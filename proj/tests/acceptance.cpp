// Scenario-level acceptance suite. Every criterion is checked against oracles
// written here from first principles (formulas, edge lists, raw trace
// bookkeeping), not against the library's own checkers. Prints one
// PASS/FAIL line per criterion; exits nonzero if any fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "swarmlink/errors.hpp"
#include "swarmlink/formation.hpp"
#include "swarmlink/middleware/wire.hpp"
#include "swarmlink/mission_fsm.hpp"
#include "swarmlink/scenario.hpp"
#include "swarmlink/trace.hpp"

using namespace swarmlink;

namespace {

constexpr double kPi = 3.141592653589793;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok) {
      pass = false;
      detail << " [" << why << "]";
    }
  }
};

int failures = 0;

void report(const std::string& name, Verdict& v) {
  std::cout << (v.pass ? "PASS " : "FAIL ") << name << ":" << v.detail.str() << std::endl;
  if (!v.pass) ++failures;
}

double secs(std::uint64_t us) { return static_cast<double>(us) * 1e-6; }

// --- running scenarios --------------------------------------------------------

struct Run {
  std::string text;
  std::vector<Json> records;
  RunSummary summary;
  double wall_s = 0;
};

Run run_config(ScenarioConfig config) {
  std::ostringstream out;
  const auto start = std::chrono::steady_clock::now();
  Run r;
  {
    Simulation sim(std::move(config), &out);
    r.summary = sim.run();
    sim.trace().flush();
  }
  r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.text = out.str();
  std::istringstream in(r.text);
  r.records = read_trace(in);
  return r;
}

std::uint64_t t_of(const Json& r) { return r.at("t_us").get<std::uint64_t>(); }
std::string field(const Json& r, const char* key) { return r.contains(key) && r.at(key).is_string() ? r.at(key).get<std::string>() : ""; }
bool is_event(const Json& r, const char* kind, const char* event) { return field(r, "kind") == kind && field(r, "event") == event; }

// --- formation oracle ---------------------------------------------------------
// Slot offsets straight from the geometry formulas, with d = spacing,
// k(i) = ceil(i/2), s(i) = -1 for odd i and +1 for even i.

struct Offset {
  double x, y, z;
};

Offset slot_offset(const std::string& geometry, double d, double alt, std::uint32_t i, std::size_t n) {
  const double k = std::ceil(i / 2.0);
  const double s = i % 2 == 1 ? -1.0 : 1.0;
  if (geometry == "line") return {0, s * k * d, alt};
  if (geometry == "column") return {-static_cast<double>(i) * d, 0, alt};
  if (geometry == "wedge") return {-k * d, s * k * d, alt};
  const double a = 2 * kPi * (i - 1) / static_cast<double>(n);
  return {d * std::cos(a), d * std::sin(a), alt};
}

// Target = leader position + R_z(yaw) * offset.
std::array<double, 3> slot_target(const std::array<double, 4>& leader, const Offset& o) {
  const double c = std::cos(leader[3]);
  const double s = std::sin(leader[3]);
  return {leader[0] + o.x * c - o.y * s, leader[1] + o.x * s + o.y * c, leader[2] + o.z};
}

struct View {
  std::optional<std::uint32_t> leader;
  Json formation;
  std::map<std::uint32_t, std::uint32_t> slots;  // follower -> slot
};

struct Sample {
  std::uint64_t t_us;
  double worst_m;
  std::string geometry;
  std::uint32_t leader;
  std::size_t followers;
};

// Worst follower slot error at each telemetry instant, judged against the
// formation, leader and slots of the latest swarm snapshot in the trace.
std::vector<Sample> slot_errors(const std::vector<Json>& trace) {
  std::vector<Sample> out;
  View view;
  std::map<std::uint32_t, std::array<double, 4>> poses;
  std::uint64_t group_t = UINT64_MAX;
  auto flush = [&] {
    if (poses.empty() || !view.leader || view.formation.is_null() || view.slots.empty()) return;
    auto lp = poses.find(*view.leader);
    if (lp == poses.end()) return;
    const auto geometry = view.formation.at("geometry").get<std::string>();
    const double d = view.formation.at("spacing_m").get<double>();
    const double alt = view.formation.at("altitude_offset_m").get<double>();
    Sample s{group_t, 0, geometry, *view.leader, 0};
    for (const auto& [id, slot] : view.slots) {
      auto fp = poses.find(id);
      if (fp == poses.end()) continue;
      const auto target = slot_target(lp->second, slot_offset(geometry, d, alt, slot, view.slots.size()));
      const double err = std::hypot(fp->second[0] - target[0], fp->second[1] - target[1], fp->second[2] - target[2]);
      s.worst_m = std::max(s.worst_m, err);
      ++s.followers;
    }
    if (s.followers > 0) out.push_back(s);
  };
  for (const auto& r : trace) {
    const auto t = t_of(r);
    if (t != group_t) {
      flush();
      poses.clear();
      group_t = t;
    }
    if (field(r, "kind") == "telemetry") {
      poses[r.at("uav").get<std::uint32_t>()] = {r.at("n").get<double>(), r.at("e").get<double>(),
                                                 r.at("d").get<double>(), r.at("yaw").get<double>()};
    } else if (is_event(r, "membership", "snapshot")) {
      View v;
      if (!r.at("leader").is_null()) v.leader = r.at("leader").get<std::uint32_t>();
      v.formation = r.at("formation");
      for (const auto& m : r.at("members")) {
        if (m.at("role").at("variant") == "follower") v.slots[m.at("id").get<std::uint32_t>()] = m.at("role").at("slot").get<std::uint32_t>();
      }
      view = std::move(v);
    }
  }
  flush();
  return out;
}

// First instant after `from` from which the error stays below the threshold
// until the end of the trace; nullopt if it never settles.
std::optional<std::uint64_t> settled_at(const std::vector<Sample>& samples, std::uint64_t from, double threshold) {
  std::optional<std::uint64_t> since;
  for (const auto& s : samples) {
    if (s.t_us < from) continue;
    if (s.worst_m >= threshold) {
      since.reset();
    } else if (!since) {
      since = s.t_us;
    }
  }
  return since;
}

std::size_t rejections(const std::vector<Json>& trace) {
  std::size_t n = 0;
  for (const auto& r : trace) {
    if (field(r, "kind") == "transition" && !r.at("accepted").get<bool>()) ++n;
  }
  return n;
}

// --- criteria -----------------------------------------------------------------

const std::vector<std::string> kScenarios = {"hover",    "formation_wedge",  "reconfig_line_circle",
                                             "failover", "takeover_onboard", "qos_loss"};

void determinism(const std::filesystem::path& dir, std::map<std::string, Run>& runs) {
  Verdict v;
  double slowest = 0;
  for (const auto& name : kScenarios) {
    const auto config = load_scenario((dir / (name + ".yaml")).string());
    auto a = run_config(config);
    const auto b = run_config(config);
    auto reseeded = config;
    reseeded.override_seed(config.seed + 1);
    const auto c = run_config(reseeded);
    slowest = std::max({slowest, a.wall_s, b.wall_s, c.wall_s});
    v.require(!a.text.empty(), name + ": empty trace");
    v.require(a.text == b.text, name + ": same seed, traces differ");
    v.require(a.text != c.text, name + ": different seed, identical trace");
    v.require(std::max({a.wall_s, b.wall_s, c.wall_s}) < 10.0, name + ": run took 10 s or more");
    runs.emplace(name, std::move(a));
  }
  v.detail << " " << kScenarios.size() << " scenarios, same seed byte-identical, seed+1 differs, slowest run "
           << slowest << " s (bound 10 s)";
  report("determinism", v);
}

void convergence(const Run& run) {
  Verdict v;
  const auto samples = slot_errors(run.records);
  double worst = 0;
  std::size_t checked = 0;
  std::uint64_t last = 0;
  std::set<std::string> geometries;
  for (const auto& s : samples) {
    if (s.t_us <= 30'000'000) continue;
    worst = std::max(worst, s.worst_m);
    ++checked;
    last = s.t_us;
    geometries.insert(s.geometry);
    v.require(s.followers == 4, "sample without 4 followers");
    if (s.worst_m >= 0.5) {
      v.require(false, "slot error " + std::to_string(s.worst_m) + " m at " + std::to_string(secs(s.t_us)) + " s");
      break;
    }
  }
  // Leader ground speed over the checked window.
  std::optional<std::array<double, 3>> first;
  std::array<double, 3> lastp{};
  for (const auto& r : run.records) {
    if (field(r, "kind") != "telemetry" || r.at("uav") != 1 || t_of(r) <= 30'000'000) continue;
    const std::array<double, 3> p{secs(t_of(r)), r.at("n").get<double>(), r.at("e").get<double>()};
    if (!first) first = p;
    lastp = p;
  }
  const double speed_n = first ? (lastp[1] - (*first)[1]) / (lastp[0] - (*first)[0]) : 0;
  v.require(checked > 0, "no samples after 30 s");
  v.require(last >= 119'000'000, "trace ends before 120 s");
  v.require(geometries == std::set<std::string>{"wedge"}, "formation is not a wedge");
  v.require(std::abs(speed_n - 4.0) < 0.1, "leader is not flying north at 4 m/s");
  v.detail << " 5-UAV wedge d=10 m, leader north at " << speed_n << " m/s, " << checked
           << " samples in (30 s, 120 s], max slot error " << worst << " m (bound 0.5 m)";
  report("formation_convergence", v);
}

void reconfiguration(const Run& run) {
  Verdict v;
  const auto samples = slot_errors(run.records);
  std::optional<std::uint64_t> switch_at;
  for (const auto& s : samples) {
    if (s.geometry == "circle") {
      switch_at = s.t_us;
      break;
    }
  }
  v.require(switch_at.has_value(), "circle never commanded");
  std::optional<std::uint64_t> settled;
  if (switch_at) {
    v.require(*switch_at >= 60'000'000 && *switch_at <= 61'000'000, "switch not at 60 s");
    bool line_before = std::any_of(samples.begin(), samples.end(), [&](const Sample& s) { return s.t_us < *switch_at && s.geometry == "line"; });
    v.require(line_before, "no line formation before the switch");
    settled = settled_at(samples, *switch_at, 0.5);
    v.require(settled.has_value(), "never re-converged");
    if (settled) v.require(*settled - *switch_at <= 20'000'000, "re-convergence took longer than 20 s");
  }
  const auto rej = rejections(run.records);
  std::size_t summary_rej = 0;
  for (const auto& u : run.summary.uavs) summary_rej += u.fsm_rejections;
  v.require(rej == 0 && summary_rej == 0, "FSM rejections logged");
  v.detail << " line->circle at " << (switch_at ? secs(*switch_at) : -1) << " s, below 0.5 m from "
           << (settled ? secs(*settled - *switch_at) : -1) << " s after the switch (bound 20 s), FSM rejections "
           << rej;
  report("formation_reconfiguration", v);
}

void failover(const Run& run) {
  Verdict v;
  const auto& trace = run.records;
  std::optional<std::uint64_t> lost_at;
  std::uint32_t old_leader = 0;
  std::size_t lost_index = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (is_event(trace[i], "membership", "leader_lost") && trace[i].at("node") == 0) {
      lost_at = t_of(trace[i]);
      old_leader = trace[i].at("uav").get<std::uint32_t>();
      lost_index = i;
      break;
    }
  }
  v.require(lost_at.has_value(), "leader never lost");
  std::optional<std::uint64_t> last_hb;
  std::optional<std::uint64_t> elected;
  std::uint32_t new_leader = 0;
  std::optional<std::uint64_t> setpoint;
  if (lost_at) {
    for (const auto& r : trace) {
      if (is_event(r, "network", "publish") && r.at("topic") == "swarm/heartbeat" && r.at("publisher") == old_leader &&
          t_of(r) <= *lost_at) {
        last_hb = t_of(r);
      }
    }
    for (std::size_t i = lost_index; i < trace.size(); ++i) {
      const auto& r = trace[i];
      if (!elected && is_event(r, "membership", "leader_elected") && r.at("node") == 0) {
        elected = t_of(r);
        new_leader = r.at("uav").get<std::uint32_t>();
      }
      if (elected && field(r, "kind") == "command" && field(r, "stage") == "dispatch" && r.at("node") == 0 &&
          field(r, "action") == "set_setpoint" && r.at("uav") != new_leader) {
        setpoint = t_of(r);
        break;
      }
    }
  }
  v.require(last_hb && *last_hb <= 20'000'000, "leader heartbeats did not stop at 20 s");
  v.require(elected && *elected <= 22'000'000, "no election by 22 s");
  v.require(setpoint && *setpoint <= 22'000'000, "no follower setpoint by 22 s");
  v.require(new_leader != old_leader && new_leader != 0, "leader unchanged");
  std::optional<std::uint64_t> settled;
  if (elected) {
    const auto samples = slot_errors(trace);
    settled = settled_at(samples, *elected, 0.5);
    v.require(settled && *settled - *elected < 20'000'000, "no re-convergence within 20 s of the election");
  }
  v.detail << " leader " << old_leader << " last heartbeat " << (last_hb ? secs(*last_hb) : -1) << " s, leader "
           << new_leader << " elected " << (elected ? secs(*elected) : -1) << " s, first follower setpoint "
           << (setpoint ? secs(*setpoint) : -1) << " s (bound 22 s), re-converged "
           << (settled && elected ? secs(*settled - *elected) : -1) << " s after election (bound 20 s)";
  report("leader_failover", v);
}

void takeover(const Run& run, const ScenarioConfig& config) {
  Verdict v;
  const auto& trace = run.records;
  const std::uint64_t period = config.membership.heartbeat_period_ms * 1000;
  const std::uint64_t bound = 4 * period + config.dt_us();
  std::optional<std::uint64_t> killed;
  for (const auto& r : trace) {
    if (is_event(r, "network", "fault") && field(r, "fault") == "kill_uav" && r.at("id") == 0) killed = t_of(r);
  }
  std::optional<std::uint64_t> assumed;
  std::uint32_t by = 0;
  std::size_t assumptions = 0;
  if (killed) {
    for (const auto& r : trace) {
      if (is_event(r, "membership", "coordinator_assumed") && t_of(r) >= *killed) {
        if (!assumed) {
          assumed = t_of(r);
          by = r.at("node").get<std::uint32_t>();
        }
        ++assumptions;
      }
    }
  }
  std::uint32_t lowest = UINT32_MAX;
  for (const auto& u : config.uavs) lowest = std::min<std::uint32_t>(lowest, u.id.value());
  v.require(killed.has_value(), "coordinator never killed");
  v.require(assumed.has_value(), "nobody assumed coordination");
  if (assumed) v.require(*assumed - *killed <= bound, "takeover slower than 4 periods + 1 tick");
  v.require(by == lowest, "coordinator is not the lowest-id UAV");

  std::set<std::uint32_t> writers_before;
  std::set<std::uint32_t> writers_after;
  std::size_t writes_after = 0;
  for (const auto& r : trace) {
    if (!is_event(r, "network", "publish") || r.at("topic") != "swarm/state") continue;
    const auto node = r.at("node").get<std::uint32_t>();
    if (killed && t_of(r) <= *killed) writers_before.insert(node);
    if (assumed && t_of(r) > *assumed + period) {
      writers_after.insert(node);
      ++writes_after;
    }
  }
  v.require(writers_before == std::set<std::uint32_t>{0}, "more than one writer before the kill");
  v.require(writers_after == std::set<std::uint32_t>{by}, "not exactly one writer after the race window");
  v.detail << " GS killed " << (killed ? secs(*killed) : -1) << " s, UAV " << by << " assumed after "
           << (assumed && killed ? secs(*assumed - *killed) : -1) << " s (bound " << secs(bound) << " s), "
           << writes_after << " swarm/state writes after the race window, writers {";
  for (auto w : writers_after) v.detail << " " << w;
  v.detail << " }";
  report("coordinator_takeover", v);
}

void reliable_qos(const Run& run, const ScenarioConfig& config) {
  Verdict v;
  const auto& trace = run.records;
  using Key = std::tuple<std::uint32_t, std::string, std::uint64_t>;
  std::map<Key, std::pair<std::uint64_t, std::vector<std::uint32_t>>> published;
  std::map<std::pair<Key, std::uint32_t>, std::size_t> delivered;
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::string>, std::uint64_t> high;
  std::size_t commands = 0;
  std::size_t out_of_order = 0;
  std::uint64_t end = 0;
  for (const auto& r : trace) {
    end = std::max(end, t_of(r));
    if (field(r, "kind") != "network" || !r.value("reliable", false)) continue;
    const auto topic = r.at("topic").get<std::string>();
    const Key key{r.at("publisher").get<std::uint32_t>(), topic, r.at("seq").get<std::uint64_t>()};
    if (field(r, "event") == "publish") {
      published[key] = {t_of(r), r.at("awaiting").get<std::vector<std::uint32_t>>()};
      if (topic.starts_with("uav/") && topic.ends_with("/cmd")) ++commands;
    } else if (field(r, "event") == "deliver" && !r.at("loopback").get<bool>()) {
      const auto reader = r.at("node").get<std::uint32_t>();
      ++delivered[{key, reader}];
      auto& h = high[{reader, std::get<0>(key), topic}];
      if (std::get<2>(key) <= h) ++out_of_order;
      h = std::max(h, std::get<2>(key));
    }
  }
  // A publish in the last 2 s may still be inside its retransmit window when
  // the run stops; it must not be duplicated but is allowed to be missing.
  std::size_t pairs = 0;
  std::size_t exact = 0;
  std::size_t missing = 0;
  std::size_t duplicates = 0;
  std::size_t in_flight = 0;
  for (const auto& [key, pub] : published) {
    for (auto reader : pub.second) {
      auto it = delivered.find({key, reader});
      const std::size_t n = it == delivered.end() ? 0 : it->second;
      if (n > 1) ++duplicates;
      if (pub.first + 2'000'000 > end) {
        ++in_flight;
        continue;
      }
      ++pairs;
      if (n == 1) ++exact;
      if (n == 0) ++missing;
    }
  }
  std::size_t unsolicited = 0;
  for (const auto& [pk, n] : delivered) {
    if (!published.contains(pk.first)) unsolicited += n;
  }
  v.require(std::abs(config.network.drop_probability - 0.3) < 1e-12, "drop probability is not 0.3");
  v.require(commands >= 500, "fewer than 500 Reliable commands");
  v.require(pairs > 0 && exact == pairs, "not every Reliable message arrived exactly once");
  v.require(duplicates == 0, "duplicates surfaced to subscribers");
  v.require(out_of_order == 0, "per-stream order violated");
  v.require(unsolicited == 0, "delivery without a publish");
  v.detail << " drop 0.3, " << commands << " Reliable commands, " << exact << "/" << pairs
           << " (message, reader) pairs delivered exactly once, " << missing << " missing, " << duplicates
           << " duplicates, " << out_of_order << " out of order, " << in_flight << " still in flight at the end";
  report("reliable_qos_under_loss", v);
}

void fsm_safety() {
  Verdict v;
  // The mission table as (from, event, to) triples; any pair not listed is rejected.
  const std::vector<std::array<const char*, 3>> edges = {
      {"init", "link_up", "connected"},           {"connected", "arm_cmd", "armed"},
      {"armed", "takeoff_cmd", "taking_off"},     {"armed", "disarm_cmd", "disarmed"},
      {"taking_off", "takeoff_complete", "hold"}, {"hold", "engage_offboard", "offboard"},
      {"hold", "rtl_cmd", "return_to_launch"},    {"hold", "land_cmd", "landing"},
      {"offboard", "hold_cmd", "hold"},           {"offboard", "rtl_cmd", "return_to_launch"},
      {"offboard", "land_cmd", "landing"},        {"return_to_launch", "land_cmd", "landing"},
      {"landing", "touchdown_detected", "armed"}, {"taking_off", "link_lost", "failsafe"},
      {"hold", "link_lost", "failsafe"},          {"offboard", "link_lost", "failsafe"},
      {"failsafe", "land_cmd", "landing"},        {"failsafe", "link_restored", "hold"},
  };
  std::map<std::pair<std::string, std::string>, std::string> table;
  for (const auto& [f, e, t] : edges) table[{f, e}] = t;
  std::size_t pairs = 0;
  std::size_t mismatches = 0;
  for (const auto s : kAllMissionStates) {
    for (const auto e : kAllMissionEvents) {
      ++pairs;
      const auto got = fsm_transition(s, e);
      const auto it = table.find({std::string(to_string(s)), std::string(to_string(e))});
      const bool ok = it == table.end() ? !got : got && to_string(*got) == it->second;
      if (!ok) {
        ++mismatches;
        v.require(false, std::string(to_string(s)) + " + " + std::string(to_string(e)));
      }
    }
  }
  v.require(pairs == 120, "table is not 10 x 12");

  // Breadth-first search from every airborne state other than Landing, with
  // Landing removed: reaching Armed or Disarmed would be a bypass.
  const std::vector<MissionState> airborne = {MissionState::TakingOff, MissionState::Hold, MissionState::Offboard,
                                              MissionState::ReturnToLaunch, MissionState::Failsafe};
  std::size_t explored = 0;
  for (const auto start : airborne) {
    std::set<MissionState> seen{start};
    std::deque<MissionState> frontier{start};
    while (!frontier.empty()) {
      const auto s = frontier.front();
      frontier.pop_front();
      ++explored;
      for (const auto e : kAllMissionEvents) {
        const auto next = fsm_transition(s, e);
        if (next && *next != MissionState::Landing && seen.insert(*next).second) frontier.push_back(*next);
      }
    }
    v.require(!seen.contains(MissionState::Disarmed) && !seen.contains(MissionState::Armed),
              std::string(to_string(start)) + " reaches the ground without landing");
  }
  v.detail << " " << pairs << " (state, event) pairs, " << mismatches << " mismatches; " << explored
           << " states explored with Landing removed, none reach Armed or Disarmed";
  report("fsm_safety", v);
}

void wire_format() {
  using namespace swarmlink::mw;
  Verdict v;
  std::mt19937_64 rng(0x5EED);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789_/";
  std::size_t round_trips = 0;
  for (int i = 0; i < 10'000; ++i) {
    Envelope e;
    std::string topic(1 + rng() % 255, 'a');
    for (auto& c : topic) c = alphabet[rng() % alphabet.size()];
    e.topic = TopicName(topic);
    e.publisher = static_cast<NodeId>(rng());
    e.seq = rng();
    e.timestamp_us = rng();
    const auto depth = static_cast<std::uint16_t>(1 + rng() % 256);
    e.qos = rng() % 2 ? QosProfile::reliable(depth) : QosProfile::best_effort(depth);
    e.payload.resize(rng() % 2048);
    for (auto& b : e.payload) b = static_cast<std::uint8_t>(rng());
    const auto bytes = encode_frame(e);
    if (bytes.size() == 28 + topic.size() + e.payload.size() && decode_frame(bytes) == e) ++round_trips;
  }
  v.require(round_trips == 10'000, "round-trip failures");

  // Hand-computed: 28-byte header then the single topic byte.
  const std::vector<std::uint8_t> expected = {'S', 'W', 'M', '1', 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0,
                                              0,   0,   0,   0,   0, 0, 0, 0, 1, 0, 0, 'a'};
  Envelope minimal;
  minimal.topic = TopicName("a");
  minimal.publisher = 1;
  minimal.seq = 1;
  minimal.timestamp_us = 0;
  minimal.qos = QosProfile::best_effort(1);
  const auto bytes = encode_frame(minimal);
  v.require(bytes == expected, "29-byte example differs");

  auto decode_error = [&](std::vector<std::uint8_t> b, DecodeErrorKind kind, std::size_t pos, const char* label) {
    try {
      decode_frame(b);
      v.require(false, std::string(label) + " decoded");
    } catch (const DecodeError& e) {
      v.require(e.kind() == kind && e.position() == pos, std::string(label) + " wrong error");
    }
  };
  auto zero_magic = bytes;
  std::fill(zero_magic.begin(), zero_magic.begin() + 4, 0);
  decode_error(zero_magic, DecodeErrorKind::bad_magic, 0, "zero magic");
  auto version = bytes;
  version[4] = 2;
  decode_error(version, DecodeErrorKind::unsupported_version, 4, "version 2");
  decode_error(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 20), DecodeErrorKind::truncated, 20, "truncated");
  auto trailing = bytes;
  trailing.push_back(0);
  decode_error(trailing, DecodeErrorKind::length_mismatch, 29, "trailing byte");
  v.detail << " " << round_trips << "/10000 random round-trips, 29-byte example exact, "
           << "bad magic / version / truncation / length mismatch rejected at the right offset";
  report("wire_format", v);
}

void formation_math() {
  Verdict v;
  std::size_t lists = 0;
  double worst_formula = 0;
  double worst_gap = 0;
  const std::map<std::string, Geometry> geometries = {
      {"line", Geometry::Line}, {"column", Geometry::Column}, {"wedge", Geometry::Wedge}, {"circle", Geometry::Circle}};
  for (const auto& [name, g] : geometries) {
    for (const double d : {0.5, 5.0, 10.0, 37.5}) {
      for (std::size_t n = 0; n <= 16; ++n) {
        const auto offsets = compute_formation_offsets(FormationSpec{g, d, -2.0}, n);
        ++lists;
        v.require(offsets.size() == n, name + " wrong length");
        std::vector<Offset> points{{0, 0, -2.0}};
        for (std::size_t i = 0; i < offsets.size(); ++i) {
          const auto want = slot_offset(name, d, -2.0, static_cast<std::uint32_t>(i + 1), n);
          worst_formula = std::max({worst_formula, std::abs(offsets[i].value.x - want.x),
                                    std::abs(offsets[i].value.y - want.y), std::abs(offsets[i].value.z - want.z)});
          points.push_back({offsets[i].value.x, offsets[i].value.y, offsets[i].value.z});
        }
        if (name == "circle") continue;  // d is a radius there, not a spacing
        double min_dist = INFINITY;
        for (std::size_t a = 0; a < points.size(); ++a) {
          for (std::size_t b = a + 1; b < points.size(); ++b) {
            min_dist = std::min(min_dist, std::hypot(points[a].x - points[b].x, points[a].y - points[b].y, points[a].z - points[b].z));
          }
        }
        if (points.size() > 1) {
          worst_gap = std::max(worst_gap, d - min_dist);
          v.require(min_dist >= d - 1e-9, name + " members closer than the spacing");
        }
      }
    }
  }
  v.require(worst_formula <= 1e-12, "offsets differ from the formulas");

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(-1000, 1000);
  std::uniform_real_distribution<double> off(-100, 100);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  double worst_iso = 0;
  double worst_rigid = 0;
  for (int i = 0; i < 100'000; ++i) {
    const Pose leader{{pos(rng), pos(rng), -std::abs(pos(rng))}, yaw(rng)};
    const BodyOffset o{{off(rng), off(rng), off(rng)}};
    const auto sp = follower_setpoint(leader, o);
    const double rel = (sp.position - leader.position).norm();
    worst_iso = std::max(worst_iso, std::abs(rel - std::hypot(o.value.x, o.value.y, o.value.z)));
    v.require(sp.yaw == leader.yaw, "follower yaw differs from leader yaw");
    // Rotating the leader by delta rotates the follower about the leader by delta.
    const double delta = yaw(rng);
    Pose turned = leader;
    turned.yaw = leader.yaw + delta;
    const auto sp2 = follower_setpoint(turned, o);
    const double rx = sp.position.x - leader.position.x;
    const double ry = sp.position.y - leader.position.y;
    const double ex = leader.position.x + rx * std::cos(delta) - ry * std::sin(delta);
    const double ey = leader.position.y + rx * std::sin(delta) + ry * std::cos(delta);
    worst_rigid = std::max({worst_rigid, std::abs(sp2.position.x - ex), std::abs(sp2.position.y - ey),
                            std::abs(sp2.position.z - sp.position.z)});
  }
  v.require(worst_iso <= 1e-9, "rotation is not an isometry to 1e-9");
  v.require(worst_rigid <= 1e-9, "yaw change is not a rigid rotation to 1e-9");
  v.detail << " " << lists << " offset lists (n <= 16) match the formulas (max dev " << worst_formula
           << "), brute-force min spacing never below d (worst shortfall " << worst_gap << " m); 100000 random "
           << "setpoints, isometry error " << worst_iso << ", rigid-rotation error " << worst_rigid << " (bound 1e-9)";
  report("formation_math", v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swarmlink acceptance suite"};
  std::string scenarios = "scenarios";
  app.add_option("--scenarios", scenarios, "directory holding the bundled scenarios")->check(CLI::ExistingDirectory);
  CLI11_PARSE(app, argc, argv);
  const std::filesystem::path dir(scenarios);

  try {
    std::map<std::string, Run> runs;
    determinism(dir, runs);
    convergence(runs.at("formation_wedge"));
    reconfiguration(runs.at("reconfig_line_circle"));
    failover(runs.at("failover"));
    takeover(runs.at("takeover_onboard"), load_scenario((dir / "takeover_onboard.yaml").string()));
    reliable_qos(runs.at("qos_loss"), load_scenario((dir / "qos_loss.yaml").string()));
    fsm_safety();
    wire_format();
    formation_math();
  } catch (const std::exception& e) {
    std::cout << "FAIL suite: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
