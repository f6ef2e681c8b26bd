#pragma once

#include <string>
#include <vector>

#include "swarmlink/text.hpp"

namespace swarmlink {

/// Outcome of one property check over a trace. `failures` empty == passed.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::vector<std::string> failures;
  std::vector<std::string> notes;  // flagged but not fatal
  Json metrics = Json::object();
};

Json to_json_value(const CheckResult& result);

struct ConvergenceOptions {
  double after_s = 30.0;     // samples before this are ignored
  double threshold_m = 0.5;  // max slot error outside settle windows
  double settle_s = 20.0;    // grace after a formation, leader or slot change
};

/// Every follower's slot error (telemetry vs the slot target computed from
/// the leader's telemetry at the same instant) stays under the threshold,
/// except within `settle_s` after a change of formation, leader or slots.
CheckResult check_formation_convergence(const std::vector<Json>& trace, const ConvergenceOptions& options = {});

/// A lost leader is replaced, and follower setpoints resume, within
/// (stale_after_missed + 1) heartbeat periods of its last heartbeat. A killed
/// coordinator is replaced by an onboard one within 4 periods plus one tick.
CheckResult check_failover_bound(const std::vector<Json>& trace);

/// Transitions follow the mission table, each starts where the previous one
/// ended, nothing disarms while airborne, and no airborne vehicle reaches
/// Disarmed without Landing -> Armed first.
CheckResult check_fsm_safety(const std::vector<Json>& trace);

/// swarm/state writers never overlap for longer than one heartbeat period.
/// Shorter overlaps (a takeover race) are noted.
CheckResult check_single_writer(const std::vector<Json>& trace);

/// Each Reliable publish reaches every reader it awaited exactly once, in
/// strictly increasing seq order per stream. Killed or partitioned readers
/// and publishes too close to the end of the trace are excused.
CheckResult check_reliable_delivery(const std::vector<Json>& trace);

std::vector<std::string> check_names();

/// Dispatches by name. Throws InvalidArgument for an unknown check.
CheckResult run_check(const std::string& name, const std::vector<Json>& trace,
                      const ConvergenceOptions& convergence = {});

}  // namespace swarmlink
