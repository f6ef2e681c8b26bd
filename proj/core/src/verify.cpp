#include "swarmlink/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "swarmlink/errors.hpp"
#include "swarmlink/formation.hpp"
#include "swarmlink/mission_fsm.hpp"

namespace swarmlink {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->template get<T>();
}

std::string str(const Json& j, const char* key) { return get_or<std::string>(j, key, ""); }
std::uint64_t u64(const Json& j, const char* key) { return get_or<std::uint64_t>(j, key, 0); }
bool is(const Json& j, const char* kind) { return str(j, "kind") == kind; }
bool is_event(const Json& j, const char* kind, const char* event) { return is(j, kind) && str(j, "event") == event; }

std::string seconds(std::uint64_t t_us) {
  std::ostringstream out;
  out.precision(3);
  out << std::fixed << static_cast<double>(t_us) * 1e-6 << " s";
  return out.str();
}

double to_s(std::uint64_t t_us) { return static_cast<double>(t_us) * 1e-6; }

struct TraceConfig {
  std::uint64_t heartbeat_period_us = 500'000;
  std::uint64_t stale_after_missed = 3;
  std::uint64_t dt_us = 100'000;
};

TraceConfig trace_config(const std::vector<Json>& trace) {
  TraceConfig c;
  for (const auto& r : trace) {
    if (!is_event(r, "membership", "config")) continue;
    c.heartbeat_period_us = u64(r, "heartbeat_period_ms") * 1000;
    c.stale_after_missed = u64(r, "stale_after_missed");
    c.dt_us = u64(r, "dt_ms") * 1000;
    break;
  }
  return c;
}

void finish(CheckResult& r) { r.passed = r.failures.empty(); }

// --- formation_convergence ---------------------------------------------------

struct FormationView {
  Json formation;  // null when none
  std::optional<std::uint32_t> leader;
  std::map<std::uint32_t, std::uint32_t> slots;

  bool operator==(const FormationView&) const = default;
};

FormationView view_of(const Json& snapshot) {
  FormationView v;
  v.formation = snapshot.value("formation", Json());
  if (auto it = snapshot.find("leader"); it != snapshot.end() && !it->is_null()) v.leader = it->get<std::uint32_t>();
  for (const auto& m : snapshot.value("members", Json::array())) {
    const auto& role = m.at("role");
    if (str(role, "variant") == "follower") v.slots[m.at("id").get<std::uint32_t>()] = role.at("slot").get<std::uint32_t>();
  }
  return v;
}

Pose telemetry_pose(const Json& t) {
  return Pose{{t.at("n").get<double>(), t.at("e").get<double>(), t.at("d").get<double>()}, t.at("yaw").get<double>()};
}

}  // namespace

Json to_json_value(const CheckResult& r) {
  return Json{{"check", r.name}, {"passed", r.passed}, {"failures", r.failures}, {"notes", r.notes}, {"metrics", r.metrics}};
}

CheckResult check_formation_convergence(const std::vector<Json>& trace, const ConvergenceOptions& options) {
  CheckResult r;
  r.name = "formation_convergence";
  const auto after_us = static_cast<std::uint64_t>(std::llround(options.after_s * 1e6));
  const auto settle_us = static_cast<std::uint64_t>(std::llround(options.settle_s * 1e6));

  std::optional<FormationView> view;
  std::vector<std::uint64_t> changes;
  struct Sample {
    std::uint64_t t_us;
    double worst;
    std::uint32_t uav;
  };
  std::vector<Sample> samples;  // worst follower error per telemetry instant

  std::map<std::uint32_t, Pose> group;
  std::uint64_t group_t = 0;
  auto evaluate = [&] {
    if (group.empty() || !view || view->formation.is_null() || !view->leader || view->slots.empty()) return;
    auto leader = group.find(*view->leader);
    if (leader == group.end()) return;
    const auto spec = view->formation.get<FormationSpec>();
    const auto offsets = compute_formation_offsets(spec, view->slots.size());
    Sample s{group_t, 0.0, 0};
    bool any = false;
    for (const auto& [id, slot] : view->slots) {
      auto f = group.find(id);
      if (f == group.end() || slot == 0 || slot > offsets.size()) continue;
      const auto target = follower_setpoint(leader->second, offsets[slot - 1]);
      const double err = (f->second.position - target.position).norm();
      if (!any || err > s.worst) s = Sample{group_t, err, id};
      any = true;
    }
    if (any) samples.push_back(s);
  };

  for (const auto& rec : trace) {
    const auto t = u64(rec, "t_us");
    if (t != group_t) {
      evaluate();
      group.clear();
      group_t = t;
    }
    if (is(rec, "telemetry")) {
      group[rec.at("uav").get<std::uint32_t>()] = telemetry_pose(rec);
    } else if (is_event(rec, "membership", "snapshot")) {
      auto next = view_of(rec);
      if (!view || !(*view == next)) {
        if (!next.formation.is_null()) changes.push_back(t);
        view = std::move(next);
      }
    }
  }
  evaluate();

  auto excused = [&](std::uint64_t t) {
    return std::any_of(changes.begin(), changes.end(), [&](std::uint64_t c) { return c <= t && t < c + settle_us; });
  };
  std::size_t checked = 0;
  double worst = 0.0;
  std::size_t reported = 0;
  for (const auto& s : samples) {
    if (s.t_us <= after_us || excused(s.t_us)) continue;
    ++checked;
    worst = std::max(worst, s.worst);
    if (s.worst >= options.threshold_m && reported++ < 10) {
      std::ostringstream msg;
      msg << "uav " << s.uav << " slot error " << s.worst << " m at " << seconds(s.t_us);
      r.failures.push_back(msg.str());
    }
  }
  if (reported > 10) r.failures.push_back(std::to_string(reported - 10) + " more violations");
  if (checked == 0) r.failures.push_back("no follower samples to check");

  Json windows = Json::array();
  for (std::size_t i = 0; i < changes.size(); ++i) {
    const auto c = changes[i];
    const auto end = i + 1 < changes.size() ? changes[i + 1] : UINT64_MAX;
    std::uint64_t converged = UINT64_MAX;  // first sample of the final all-good run
    for (const auto& s : samples) {
      if (s.t_us < c || s.t_us >= end) continue;
      if (s.worst >= options.threshold_m) {
        converged = UINT64_MAX;
      } else if (converged == UINT64_MAX) {
        converged = s.t_us;
      }
    }
    Json w{{"t_s", to_s(c)}};
    w["reconverge_s"] = converged != UINT64_MAX ? Json(to_s(converged - c)) : Json(nullptr);
    windows.push_back(w);
    // Only changes after the warm-up whose settle window is fully observed are judged.
    const bool observed = end - c >= settle_us && !samples.empty() && samples.back().t_us >= c + settle_us;
    if (c >= after_us && observed && (converged == UINT64_MAX || converged - c > settle_us)) {
      r.failures.push_back("no re-convergence within " + seconds(settle_us) + " of the change at " + seconds(c));
    }
  }
  r.metrics = Json{{"samples_checked", checked}, {"max_error_m", worst}, {"changes", windows}};
  finish(r);
  return r;
}

// --- failover_bound ----------------------------------------------------------

CheckResult check_failover_bound(const std::vector<Json>& trace) {
  CheckResult r;
  r.name = "failover_bound";
  const auto cfg = trace_config(trace);
  const std::uint64_t leader_bound = (cfg.stale_after_missed + 1) * cfg.heartbeat_period_us;
  const std::uint64_t takeover_bound = 4 * cfg.heartbeat_period_us + cfg.dt_us;

  std::map<std::uint32_t, std::vector<std::uint64_t>> heartbeats;  // uav -> publish times
  std::map<std::uint32_t, std::vector<std::uint64_t>> state_writes;  // node -> swarm/state publish times
  for (const auto& rec : trace) {
    if (!is_event(rec, "network", "publish")) continue;
    const auto topic = str(rec, "topic");
    if (topic == "swarm/heartbeat") heartbeats[rec.at("publisher").get<std::uint32_t>()].push_back(u64(rec, "t_us"));
    if (topic == "swarm/state") state_writes[rec.at("node").get<std::uint32_t>()].push_back(u64(rec, "t_us"));
  }

  Json leader_failovers = Json::array();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& lost = trace[i];
    if (!is_event(lost, "membership", "leader_lost")) continue;
    const auto node = u64(lost, "node");
    const auto old_leader = lost.at("uav").get<std::uint32_t>();
    const auto t_lost = u64(lost, "t_us");

    std::optional<std::uint64_t> t_hb;
    for (auto t : heartbeats[old_leader]) {
      if (t <= t_lost) t_hb = t;
    }
    std::optional<std::uint64_t> t_elected;
    std::uint32_t new_leader = 0;
    std::optional<std::uint64_t> t_setpoint;
    for (std::size_t k = i + 1; k < trace.size(); ++k) {
      const auto& rec = trace[k];
      if (!t_elected) {
        if (is_event(rec, "membership", "leader_elected") && u64(rec, "node") == node) {
          t_elected = u64(rec, "t_us");
          new_leader = rec.at("uav").get<std::uint32_t>();
        } else if (is_event(rec, "membership", "leader_lost") && u64(rec, "node") == node) {
          break;
        }
        continue;
      }
      if (is(rec, "command") && str(rec, "stage") == "dispatch" && u64(rec, "node") == node &&
          str(rec, "action") == "set_setpoint" && u64(rec, "uav") != new_leader) {
        t_setpoint = u64(rec, "t_us");
        break;
      }
    }
    if (!t_elected) {
      r.notes.push_back("leader " + std::to_string(old_leader) + " lost at " + seconds(t_lost) +
                        " without an eligible successor");
      continue;
    }
    const auto base = t_hb.value_or(t_lost);
    Json f{{"node", node},
           {"old_leader", old_leader},
           {"new_leader", new_leader},
           {"last_heartbeat_s", to_s(base)},
           {"elected_s", to_s(*t_elected)},
           {"first_setpoint_s", t_setpoint ? Json(to_s(*t_setpoint)) : Json(nullptr)},
           {"bound_s", to_s(leader_bound)}};
    leader_failovers.push_back(f);
    if (*t_elected - base > leader_bound) {
      r.failures.push_back("leader " + std::to_string(new_leader) + " elected " + seconds(*t_elected - base) +
                           " after the last heartbeat of " + std::to_string(old_leader));
    }
    if (!t_setpoint) {
      r.failures.push_back("no follower setpoint after the election at " + seconds(*t_elected));
    } else if (*t_setpoint - base > leader_bound) {
      r.failures.push_back("first follower setpoint " + seconds(*t_setpoint - base) + " after the last heartbeat of " +
                           std::to_string(old_leader));
    }
  }

  Json takeovers = Json::array();
  for (const auto& rec : trace) {
    if (!is_event(rec, "network", "fault") || str(rec, "fault") != "kill_uav") continue;
    const auto t_kill = u64(rec, "t_us");
    const auto node = rec.at("id").get<std::uint32_t>();
    const auto& writes = state_writes[node];
    const bool was_coordinator = std::any_of(writes.begin(), writes.end(), [&](std::uint64_t t) {
      return t <= t_kill && t_kill - t <= cfg.heartbeat_period_us * 2;
    });
    if (!was_coordinator) continue;
    std::optional<std::uint64_t> t_assumed;
    std::uint32_t by = 0;
    for (const auto& a : trace) {
      if (is_event(a, "membership", "coordinator_assumed") && u64(a, "t_us") >= t_kill) {
        t_assumed = u64(a, "t_us");
        by = a.at("node").get<std::uint32_t>();
        break;
      }
    }
    if (!t_assumed) {
      r.failures.push_back("no coordinator took over after node " + std::to_string(node) + " was killed at " +
                           seconds(t_kill));
      continue;
    }
    takeovers.push_back(Json{{"killed", node},
                             {"killed_s", to_s(t_kill)},
                             {"assumed_by", by},
                             {"assumed_s", to_s(*t_assumed)},
                             {"latency_s", to_s(*t_assumed - t_kill)},
                             {"bound_s", to_s(takeover_bound)}});
    if (*t_assumed - t_kill > takeover_bound) {
      r.failures.push_back("takeover by node " + std::to_string(by) + " took " + seconds(*t_assumed - t_kill));
    }
  }

  if (leader_failovers.empty() && takeovers.empty()) r.failures.push_back("no failover found in trace");
  r.metrics = Json{{"leader_failovers", leader_failovers}, {"takeovers", takeovers}};
  finish(r);
  return r;
}

// --- fsm_safety --------------------------------------------------------------

CheckResult check_fsm_safety(const std::vector<Json>& trace) {
  CheckResult r;
  r.name = "fsm_safety";
  struct Track {
    MissionState state = MissionState::Init;
    bool flown = false;  // left the ground since the last touchdown
  };
  std::map<std::uint32_t, Track> uavs;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t telemetry = 0;

  auto state_of = [](const Json& j, const char* key) {
    auto s = mission_state_from_string(str(j, key));
    if (!s) throw InvalidArgument(std::string("bad mission state in field ") + key);
    return *s;
  };

  for (const auto& rec : trace) {
    const auto t = u64(rec, "t_us");
    if (is(rec, "telemetry")) {
      ++telemetry;
      if (!get_or(rec, "armed", true) && get_or(rec, "airborne", false)) {
        r.failures.push_back("uav " + std::to_string(u64(rec, "uav")) + " disarmed while airborne at " + seconds(t));
      }
      continue;
    }
    if (!is(rec, "transition")) continue;
    const auto id = rec.at("uav").get<std::uint32_t>();
    auto& track = uavs[id];
    const auto event = mission_event_from_string(str(rec, "event"));
    if (!event) {
      r.failures.push_back("unknown event in transition at " + seconds(t));
      continue;
    }
    const auto expected = fsm_transition(track.state, *event);
    const std::string who = "uav " + std::to_string(id) + " at " + seconds(t);
    if (!get_or(rec, "accepted", false)) {
      ++rejected;
      if (state_of(rec, "state") != track.state) r.failures.push_back(who + ": rejection recorded in wrong state");
      if (expected) r.failures.push_back(who + ": table accepts the rejected event");
      continue;
    }
    ++accepted;
    const auto from = state_of(rec, "from");
    const auto to = state_of(rec, "to");
    if (from != track.state) r.failures.push_back(who + ": transition starts from a state it was not in");
    if (!expected || *expected != to) r.failures.push_back(who + ": transition not in table");
    if (to == MissionState::TakingOff) track.flown = true;
    if (from == MissionState::Landing && to == MissionState::Armed) track.flown = false;
    if (to == MissionState::Disarmed && track.flown) r.failures.push_back(who + ": disarmed without landing");
    track.state = to;
  }
  r.metrics = Json{{"uavs", uavs.size()}, {"accepted", accepted}, {"rejected", rejected}, {"telemetry", telemetry}};
  finish(r);
  return r;
}

// --- single_writer -----------------------------------------------------------

CheckResult check_single_writer(const std::vector<Json>& trace) {
  CheckResult r;
  r.name = "single_writer";
  const auto cfg = trace_config(trace);
  constexpr std::uint64_t kRunGap = 2'000'000;

  std::map<std::uint32_t, std::vector<std::uint64_t>> writes;
  for (const auto& rec : trace) {
    if (is_event(rec, "network", "publish") && str(rec, "topic") == "swarm/state") {
      writes[rec.at("node").get<std::uint32_t>()].push_back(u64(rec, "t_us"));
    }
  }
  struct Run {
    std::uint32_t node;
    std::uint64_t start;
    std::uint64_t end;
  };
  std::vector<Run> runs;
  for (const auto& [node, times] : writes) {
    Run run{node, times.front(), times.front()};
    for (auto t : times) {
      if (t - run.end > kRunGap) {
        runs.push_back(run);
        run = Run{node, t, t};
      }
      run.end = t;
    }
    runs.push_back(run);
  }
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t k = i + 1; k < runs.size(); ++k) {
      const auto& a = runs[i];
      const auto& b = runs[k];
      if (a.node == b.node) continue;
      const auto lo = std::max(a.start, b.start);
      const auto hi = std::min(a.end, b.end);
      if (lo > hi) continue;
      const auto overlap = hi - lo;
      const std::string what = "nodes " + std::to_string(a.node) + " and " + std::to_string(b.node) +
                               " both wrote swarm/state for " + seconds(overlap) + " from " + seconds(lo);
      if (overlap <= cfg.heartbeat_period_us) {
        ++flagged;
        r.notes.push_back(what);
      } else {
        r.failures.push_back(what);
      }
    }
  }
  Json writers = Json::array();
  for (const auto& run : runs) writers.push_back(Json{{"node", run.node}, {"from_s", to_s(run.start)}, {"to_s", to_s(run.end)}});
  if (runs.empty()) r.failures.push_back("no swarm/state writes in trace");
  r.metrics = Json{{"writer_runs", writers}, {"flagged_overlaps", flagged}};
  finish(r);
  return r;
}

// --- reliable_delivery -------------------------------------------------------

CheckResult check_reliable_delivery(const std::vector<Json>& trace) {
  CheckResult r;
  r.name = "reliable_delivery";
  constexpr std::uint64_t kTail = 2'000'000;  // publishes this close to the end may still be in flight

  using MsgKey = std::tuple<std::uint32_t, std::string, std::uint64_t>;  // publisher, topic, seq
  struct Pub {
    std::uint64_t t_us;
    std::vector<std::uint32_t> awaiting;
  };
  std::map<MsgKey, Pub> publishes;
  std::map<std::pair<MsgKey, std::uint32_t>, std::size_t> deliveries;  // (msg, reader) -> count
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::string>, std::uint64_t> last_seq;  // reader, publisher, topic
  std::map<std::uint32_t, std::uint64_t> killed;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> partitioned;  // first partition time
  std::uint64_t end_us = 0;
  std::size_t order_violations = 0;
  std::size_t command_publishes = 0;

  for (const auto& rec : trace) {
    const auto t = u64(rec, "t_us");
    end_us = std::max(end_us, t);
    if (!is(rec, "network")) continue;
    const auto event = str(rec, "event");
    if (event == "fault") {
      const auto fault = str(rec, "fault");
      if (fault == "kill_uav") killed.emplace(rec.at("id").get<std::uint32_t>(), t);
      if (fault == "partition_link") {
        auto a = rec.at("a").get<std::uint32_t>();
        auto b = rec.at("b").get<std::uint32_t>();
        partitioned.emplace(std::minmax(a, b), t);
      }
      continue;
    }
    if (!get_or(rec, "reliable", false)) continue;
    const auto topic = str(rec, "topic");
    const MsgKey key{rec.at("publisher").get<std::uint32_t>(), topic, u64(rec, "seq")};
    if (event == "publish") {
      publishes[key] = Pub{t, rec.value("awaiting", std::vector<std::uint32_t>{})};
      if (topic.rfind("uav/", 0) == 0 && topic.size() > 4 && topic.substr(topic.size() - 4) == "/cmd") ++command_publishes;
    } else if (event == "deliver" && !get_or(rec, "loopback", false)) {
      const auto reader = rec.at("node").get<std::uint32_t>();
      ++deliveries[{key, reader}];
      auto& last = last_seq[{reader, std::get<0>(key), topic}];
      if (std::get<2>(key) <= last) {
        if (order_violations++ < 10) {
          r.failures.push_back("node " + std::to_string(reader) + " got " + topic + " seq " +
                               std::to_string(std::get<2>(key)) + " after seq " + std::to_string(last));
        }
      }
      last = std::max(last, std::get<2>(key));
    }
  }

  auto excused = [&](std::uint32_t publisher, std::uint32_t reader, std::uint64_t t) {
    if (t + kTail > end_us) return true;
    for (auto node : {publisher, reader}) {
      if (auto k = killed.find(node); k != killed.end() && t + kTail > k->second) return true;
    }
    auto p = partitioned.find(std::minmax(publisher, reader));
    return p != partitioned.end() && t + kTail > p->second;
  };

  std::size_t expected = 0;
  std::size_t exact = 0;
  std::size_t lost = 0;
  std::size_t duplicated = 0;
  std::size_t excused_count = 0;
  for (const auto& [key, pub] : publishes) {
    for (auto reader : pub.awaiting) {
      auto it = deliveries.find({key, reader});
      const std::size_t n = it == deliveries.end() ? 0 : it->second;
      if (excused(std::get<0>(key), reader, pub.t_us)) {
        ++excused_count;
        if (n > 1) ++duplicated;
        continue;
      }
      ++expected;
      if (n == 1) {
        ++exact;
        continue;
      }
      (n == 0 ? lost : duplicated) += 1;
      if (lost + duplicated <= 10) {
        r.failures.push_back(std::get<1>(key) + " seq " + std::to_string(std::get<2>(key)) + " from node " +
                             std::to_string(std::get<0>(key)) + " reached node " + std::to_string(reader) + " " +
                             std::to_string(n) + " times");
      }
    }
  }
  if (duplicated > 0 && lost + duplicated > 10) r.failures.push_back("further delivery violations omitted");
  if (expected == 0) r.failures.push_back("no reliable deliveries to check");
  r.metrics = Json{{"reliable_publishes", publishes.size()},
                   {"command_publishes", command_publishes},
                   {"expected_deliveries", expected},
                   {"exactly_once", exact},
                   {"lost", lost},
                   {"duplicated", duplicated},
                   {"order_violations", order_violations},
                   {"excused", excused_count}};
  finish(r);
  return r;
}

std::vector<std::string> check_names() {
  return {"formation_convergence", "failover_bound", "fsm_safety", "single_writer", "reliable_delivery"};
}

CheckResult run_check(const std::string& name, const std::vector<Json>& trace, const ConvergenceOptions& convergence) {
  if (name == "formation_convergence") return check_formation_convergence(trace, convergence);
  if (name == "failover_bound") return check_failover_bound(trace);
  if (name == "fsm_safety") return check_fsm_safety(trace);
  if (name == "single_writer") return check_single_writer(trace);
  if (name == "reliable_delivery") return check_reliable_delivery(trace);
  throw InvalidArgument("unknown check '" + name + "'");
}

}  // namespace swarmlink
