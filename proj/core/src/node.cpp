#include "swarmlink/node.hpp"

#include <cmath>

#include "swarmlink/errors.hpp"

namespace swarmlink {

namespace {

// Envelope timestamps are the sender's clock. They date a pose sample only
// when plausible against the local clock; otherwise the receive time does.
std::uint64_t sample_time(const mw::Envelope& e, std::uint64_t now_us) {
  constexpr std::uint64_t kMaxAge = 1'000'000;
  return e.timestamp_us <= now_us && now_us - e.timestamp_us <= kMaxAge ? e.timestamp_us : now_us;
}

Json setpoint_fields(const UavCommand& c) {
  Json f{{"action", c.action}, {"command_id", c.command_id}};
  if (c.setpoint) f["setpoint"] = *c.setpoint;
  return f;
}

void bad_payload(TraceWriter* trace, std::uint64_t t_us, NodeId node, const mw::Envelope& e, const std::string& why) {
  if (!trace) return;
  trace->record(t_us, "network",
                Json{{"event", "bad_payload"},
                     {"node", node},
                     {"topic", e.topic.str()},
                     {"publisher", e.publisher},
                     {"seq", e.seq},
                     {"error", why}});
}

Json compact_snapshot(const SwarmSnapshot& s) {
  Json members = Json::array();
  for (const auto& m : s.members) {
    members.push_back(Json{{"id", m.id}, {"role", m.role}, {"mission_state", m.mission_state}});
  }
  return Json{{"leader", s.leader ? Json(*s.leader) : Json(nullptr)},
              {"formation", s.formation ? Json(*s.formation) : Json(nullptr)},
              {"members", members}};
}

}  // namespace

// --- CoordinatorHost ---------------------------------------------------------

CoordinatorHost::CoordinatorHost(mw::Bus& bus, CoordinatorConfig config, TraceWriter* trace)
    : bus_(&bus), coordinator_(std::move(config)), trace_(trace) {}

void CoordinatorHost::trace(std::uint64_t t_us, std::string_view kind, const Json& fields) {
  if (trace_) trace_->record(t_us, kind, fields);
}

mw::Publisher& CoordinatorHost::publisher(const mw::TopicName& topic, mw::QosProfile qos) {
  auto it = publishers_.find(topic);
  if (it == publishers_.end()) it = publishers_.emplace(topic, mw::Publisher(*bus_, topic, qos)).first;
  return it->second;
}

void CoordinatorHost::on_heartbeat(const mw::Envelope& e, std::uint64_t now_us) {
  try {
    const auto hb = decode_payload<Heartbeat>(e.payload);
    if (e.publisher != hb.id.node()) {
      throw ProtocolViolation("heartbeat for uav " + std::to_string(hb.id.value()) + " published by node " +
                              std::to_string(e.publisher));
    }
    coordinator_.ingest_heartbeat(hb, now_us, sample_time(e, now_us));
  } catch (const InvalidArgument& err) {
    bad_payload(trace_, now_us, bus_->self(), e, err.what());
  } catch (const ProtocolViolation& err) {
    bad_payload(trace_, now_us, bus_->self(), e, err.what());
  }
}

void CoordinatorHost::on_operator(const mw::Envelope& e, std::uint64_t now_us, bool active) {
  GcsCommand command;
  try {
    command = decode_payload<GcsCommand>(e.payload);
  } catch (const InvalidArgument& err) {
    bad_payload(trace_, now_us, bus_->self(), e, err.what());
    return;
  }
  const Dispatch out = coordinator_.handle_operator(command);
  if (!active) return;
  trace(now_us, "command",
        Json{{"stage", "operator"},
             {"node", bus_->self()},
             {"command_id", command.command_id},
             {"action", action_name(command.command)},
             {"seq", e.seq}});
  for (const auto& c : out.commands) send_command(c, now_us);
  for (const auto& g : out.gimbal) send_gimbal(g, now_us);
}

void CoordinatorHost::send_command(const OutgoingCommand& out, std::uint64_t now_us) {
  Json fields{{"stage", "dispatch"}, {"node", bus_->self()}, {"uav", out.to}};
  fields.update(setpoint_fields(out.command));
  try {
    fields["seq"] = publisher(topics::uav_cmd(out.to), topics::kUavCmdQos).publish(encode_payload(out.command), now_us);
  } catch (const BackPressure&) {
    fields["busy"] = true;
  }
  trace(now_us, "command", fields);
}

void CoordinatorHost::send_gimbal(const OutgoingGimbal& out, std::uint64_t now_us) {
  Json fields{{"stage", "dispatch"},
              {"node", bus_->self()},
              {"uav", out.to},
              {"action", "gimbal_point"},
              {"command_id", out.command.command_id},
              {"target", out.command.target}};
  try {
    fields["seq"] =
        publisher(topics::uav_gimbal_cmd(out.to), topics::kGimbalCmdQos).publish(encode_payload(out.command), now_us);
  } catch (const BackPressure&) {
    fields["busy"] = true;
  }
  trace(now_us, "command", fields);
}

void CoordinatorHost::run(std::uint64_t now_us) {
  if (auto out = coordinator_.maybe_tick(now_us)) publish_tick(*out, now_us);
}

void CoordinatorHost::publish_tick(const TickOutput& out, std::uint64_t now_us) {
  for (const auto& ev : out.events) {
    trace(now_us, "membership", Json{{"event", to_string(ev.kind)}, {"node", bus_->self()}, {"uav", ev.id}});
  }
  for (const auto& c : out.commands) send_command(c, now_us);
  Json fields{{"event", "snapshot"}, {"node", bus_->self()}};
  fields.update(compact_snapshot(out.snapshot));
  trace(now_us, "membership", fields);
  publisher(topics::swarm_state(), topics::kStateQos).publish(encode_payload(out.snapshot), now_us);
}

// --- UavNode -----------------------------------------------------------------

UavNode::UavNode(UavSpec spec, mw::Bus& bus, NodeOptions options, TraceWriter* trace)
    : spec_(std::move(spec)),
      bus_(&bus),
      options_(std::move(options)),
      trace_(trace),
      vehicle_(spec_.start_position, spec_.params, spec_.start_yaw),
      host_(bus, options_.coordinator, trace),
      heartbeat_pub_(bus, topics::heartbeat(), topics::kHeartbeatQos),
      telemetry_pub_(bus, topics::uav_telemetry(spec_.id), topics::kTelemetryQos),
      result_pub_(bus, topics::cmd_result(), topics::kCmdResultQos),
      frames_pub_(bus, topics::uav_frames(spec_.id), topics::kFramesQos),
      detections_pub_(bus, topics::uav_detections(spec_.id), topics::kDetectionsQos) {
  if (!spec_.id.valid()) throw InvalidArgument("uav id must be nonzero");
  if (bus.self() != spec_.id.node()) throw InvalidArgument("bus node id does not match uav id");
  cmd_sub_ = bus.subscribe(topics::uav_cmd(spec_.id), topics::kUavCmdQos);
  gimbal_sub_ = bus.subscribe(topics::uav_gimbal_cmd(spec_.id), topics::kGimbalCmdQos);
  state_sub_ = bus.subscribe(topics::swarm_state(), topics::kStateQos);
  heartbeat_sub_ = bus.subscribe(topics::heartbeat(), topics::kHeartbeatQos);
  operator_sub_ = bus.subscribe(topics::gcs_cmd(), topics::kGcsCmdQos);
  if (spec_.uav_class == UavClass::Observation) {
    camera_.emplace(spec_.id);
    detector_ = std::make_shared<StubDetector>();
  }
}

void UavNode::trace(std::uint64_t t_us, std::string_view kind, const Json& fields) {
  if (trace_) trace_->record(t_us, kind, fields);
}

bool UavNode::fire(MissionEvent event, std::uint64_t now_us, const char* cause) {
  const MissionState from = fsm_.state();
  if (!fsm_.handle(event)) {
    ++fsm_rejections_;
    trace(now_us, "transition",
          Json{{"uav", spec_.id}, {"state", from}, {"event", event}, {"accepted", false}, {"cause", cause}});
    return false;
  }
  trace(now_us, "transition",
        Json{{"uav", spec_.id}, {"from", from}, {"to", fsm_.state()}, {"event", event}, {"accepted", true},
             {"cause", cause}});
  return true;
}

void UavNode::hold_position() {
  if (!vehicle_.state().airborne) return;
  const auto& pose = vehicle_.state().pose;
  vehicle_.offboard_command(cmd::SetSetpoint{Setpoint{pose.position, pose.yaw}});
}

void UavNode::return_to_launch() {
  const auto& pose = vehicle_.state().pose;
  const Vec3 target{spec_.start_position.x, spec_.start_position.y, pose.position.z};
  vehicle_.offboard_command(cmd::SetSetpoint{Setpoint{target, pose.yaw}});
}

CommandOutcome UavNode::execute(const UavCommand& command, std::uint64_t now_us) {
  CommandOutcome outcome{spec_.id, command.command_id, command.action, true, {}};
  auto reject = [&](std::string why) {
    outcome.accepted = false;
    outcome.reason = std::move(why);
    ++command_rejections_;
    return outcome;
  };
  // Mission-level check first, then the flight controller; the FSM only
  // advances when both accept.
  auto gated = [&](MissionEvent event, const std::optional<VehicleCommand>& vc) {
    if (!fsm_.accepts(event)) {
      fire(event, now_us, "command");
      return reject(std::string("rejected in state ") + std::string(to_string(fsm_.state())));
    }
    if (vc) {
      auto r = vehicle_.offboard_command(*vc);
      if (!r.accepted) return reject(r.reason);
    }
    fire(event, now_us, "command");
    return outcome;
  };

  switch (command.action) {
    case UavAction::Arm: return gated(MissionEvent::ArmCmd, cmd::Arm{});
    case UavAction::Disarm: return gated(MissionEvent::DisarmCmd, cmd::Disarm{});
    case UavAction::Takeoff: return gated(MissionEvent::TakeoffCmd, cmd::Takeoff{});
    case UavAction::Land: return gated(MissionEvent::LandCmd, cmd::Land{});
    case UavAction::Offboard: return gated(MissionEvent::EngageOffboard, std::nullopt);
    case UavAction::Hold: {
      auto r = gated(MissionEvent::HoldCmd, std::nullopt);
      if (r.accepted) hold_position();
      return r;
    }
    case UavAction::Rtl: {
      auto r = gated(MissionEvent::RtlCmd, std::nullopt);
      if (r.accepted) return_to_launch();
      return r;
    }
    case UavAction::SetSetpoint: {
      if (fsm_.state() != MissionState::Offboard) return reject("not offboard");
      if (!command.setpoint) return reject("missing setpoint");
      auto r = vehicle_.offboard_command(cmd::SetSetpoint{*command.setpoint});
      if (!r.accepted) return reject(r.reason);
      return outcome;
    }
  }
  return reject("unknown action");
}

void UavNode::report(const CommandOutcome& outcome, std::uint64_t now_us) {
  trace(now_us, "command",
        Json{{"stage", "result"},
             {"uav", outcome.uav},
             {"action", outcome.action},
             {"command_id", outcome.command_id},
             {"accepted", outcome.accepted},
             {"reason", outcome.reason}});
  // Routine setpoint acceptances are not reported upstream.
  if (outcome.accepted && outcome.action == UavAction::SetSetpoint) return;
  result_pub_.publish(encode_payload(outcome), now_us);
}

void UavNode::on_swarm_state(const mw::Envelope& e, std::uint64_t now_us) {
  SwarmSnapshot snapshot;
  try {
    snapshot = decode_payload<SwarmSnapshot>(e.payload);
  } catch (const InvalidArgument& err) {
    bad_payload(trace_, now_us, bus_->self(), e, err.what());
    return;
  }
  last_state_rx_us_ = now_us;
  if (fsm_.state() == MissionState::Init) fire(MissionEvent::LinkUp, now_us, "link");
  if (fsm_.state() == MissionState::Failsafe && fire(MissionEvent::LinkRestored, now_us, "link")) hold_position();

  if (e.publisher == bus_->self()) return;
  if (coordinating_ && e.publisher < bus_->self()) {
    coordinating_ = false;
    trace(now_us, "membership",
          Json{{"event", "coordinator_resigned"}, {"node", bus_->self()}, {"yielded_to", e.publisher}});
  }
  if (!coordinating_) host_.coordinator().adopt(snapshot);
}

void UavNode::on_gimbal(const mw::Envelope& e, std::uint64_t now_us) {
  GimbalCommand command;
  try {
    command = decode_payload<GimbalCommand>(e.payload);
  } catch (const InvalidArgument& err) {
    bad_payload(trace_, now_us, bus_->self(), e, err.what());
    return;
  }
  Json fields{{"stage", "result"}, {"uav", spec_.id}, {"action", "gimbal_point"}, {"command_id", command.command_id}};
  try {
    const auto aim = gimbal_point_at(vehicle_.state().pose, command.target);
    gimbal_.pan = aim.state.pan;
    gimbal_.tilt = aim.state.tilt;
    fields["accepted"] = true;
    fields["clamped"] = aim.clamped;
    fields["gimbal"] = gimbal_;
  } catch (const InvalidArgument& err) {
    ++command_rejections_;
    fields["accepted"] = false;
    fields["reason"] = err.what();
  }
  trace(now_us, "command", fields);
}

void UavNode::ingest(std::uint64_t now_us) {
  for (const auto& e : heartbeat_sub_->drain()) host_.on_heartbeat(e, now_us);
  for (const auto& e : operator_sub_->drain()) host_.on_operator(e, now_us, coordinating_);
  for (const auto& e : state_sub_->drain()) on_swarm_state(e, now_us);
  for (const auto& e : cmd_sub_->drain()) {
    UavCommand command;
    try {
      command = decode_payload<UavCommand>(e.payload);
    } catch (const InvalidArgument& err) {
      bad_payload(trace_, now_us, bus_->self(), e, err.what());
      continue;
    }
    report(execute(command, now_us), now_us);
  }
  for (const auto& e : gimbal_sub_->drain()) on_gimbal(e, now_us);
}

void UavNode::coordinate(std::uint64_t now_us) {
  if (!coordinating_) {
    host_.coordinator().expire(now_us);
    if (!options_.onboard_takeover) return;
    const std::uint64_t since = last_state_rx_us_.value_or(0);
    const std::uint64_t silence = now_us > since ? now_us - since : 0;
    if (!assume_coordinator(spec_.id, host_.coordinator().registry(), silence, options_.membership())) return;
    coordinating_ = true;
    trace(now_us, "membership",
          Json{{"event", "coordinator_assumed"}, {"node", bus_->self()}, {"uav", spec_.id}, {"silence_us", silence}});
  }
  host_.run(now_us);
}

void UavNode::supervise(std::uint64_t now_us) {
  const auto& state = vehicle_.state();
  switch (fsm_.state()) {
    case MissionState::TakingOff:
      if (state.airborne) fire(MissionEvent::TakeoffComplete, now_us, "auto");
      break;
    case MissionState::ReturnToLaunch:
    case MissionState::Failsafe: {
      const Vec3 offset = state.pose.position - spec_.start_position;
      if (offset.horizontal_norm() <= options_.rtl_land_radius_m && vehicle_.offboard_command(cmd::Land{}).accepted) {
        fire(MissionEvent::LandCmd, now_us, "auto");
      }
      break;
    }
    case MissionState::Landing:
      if (vehicle_.on_ground()) fire(MissionEvent::TouchdownDetected, now_us, "auto");
      break;
    default:
      break;
  }
  if (is_link_supervised(fsm_.state())) {
    const std::uint64_t since = last_state_rx_us_.value_or(0);
    if (now_us > since && now_us - since > options_.link_loss_after_us && fire(MissionEvent::LinkLost, now_us, "link")) {
      return_to_launch();
    }
  }
}

void UavNode::publish_telemetry(std::uint64_t now_us) {
  const auto& s = vehicle_.state();
  telemetry_pub_.publish(encode_payload(Telemetry{spec_.id, s, fsm_.state()}), now_us);
  const auto& p = s.pose.position;
  trace(now_us, "telemetry",
        Json{{"uav", spec_.id},
             {"n", p.x},
             {"e", p.y},
             {"d", p.z},
             {"yaw", s.pose.yaw},
             {"vn", s.velocity.x},
             {"ve", s.velocity.y},
             {"vd", s.velocity.z},
             {"armed", s.armed},
             {"airborne", s.airborne},
             {"state", fsm_.state()}});
}

void UavNode::publish_heartbeat(std::uint64_t now_us) {
  Heartbeat hb{spec_.id, spec_.uav_class, fsm_.state(), vehicle_.state().pose, ++heartbeat_seq_};
  heartbeat_pub_.publish(encode_payload(hb), now_us);
}

void UavNode::run_payload(std::uint64_t now_us) {
  if (!camera_) return;
  const auto frame = camera_->stream_tick(now_us);
  if (!frame) return;
  frames_pub_.publish(encode_payload(*frame), now_us);
  if (!detector_ || !truth_) return;
  std::vector<TruthTarget> truth;
  for (auto& t : truth_()) {
    if (t.id != spec_.id) truth.push_back(t);
  }
  const auto detections = run_detector(*detector_, *frame, truth, Observer{vehicle_.state().pose, gimbal_},
                                       [&](const std::string& why) {
                                         trace(now_us, "audit", Json{{"event", "detector_error"},
                                                                     {"uav", spec_.id},
                                                                     {"error", why}});
                                       });
  if (detections.empty()) return;
  Json list = Json::array();
  for (const auto& d : detections) list.push_back(d);
  const std::string text = Json{{"frame", *frame}, {"detections", list}}.dump();
  detections_pub_.publish({text.begin(), text.end()}, now_us);
}

void UavNode::advance(std::uint64_t now_us, double dt_s) {
  supervise(now_us);
  if (now_us >= next_telemetry_us_) {
    publish_telemetry(now_us);
    while (next_telemetry_us_ <= now_us) next_telemetry_us_ += options_.telemetry_period_us;
  }
  if (now_us >= next_heartbeat_us_) {
    if (!heartbeats_silenced_) publish_heartbeat(now_us);
    while (next_heartbeat_us_ <= now_us) next_heartbeat_us_ += options_.membership().heartbeat_period_us();
  }
  run_payload(now_us);
  vehicle_.step(dt_s);
}

// --- GcsNode -----------------------------------------------------------------

GcsNode::GcsNode(mw::Bus& bus, NodeOptions options, bool host_coordinator, TraceWriter* trace)
    : bus_(&bus),
      trace_(trace),
      gcs_pub_(bus, topics::gcs_cmd(), topics::kGcsCmdQos),
      station_([this](const GcsCommand& c, std::uint64_t now_us) { return gcs_pub_.publish(encode_payload(c), now_us); }) {
  if (bus.self() != kGroundStationNode) throw InvalidArgument("ground station must be node 0");
  if (host_coordinator) {
    host_ = std::make_unique<CoordinatorHost>(bus, options.coordinator, trace);
    heartbeat_sub_ = bus.subscribe(topics::heartbeat(), topics::kHeartbeatQos);
    operator_sub_ = bus.subscribe(topics::gcs_cmd(), topics::kGcsCmdQos);
  }
  state_sub_ = bus.subscribe(topics::swarm_state(), topics::kStateQos);
  result_sub_ = bus.subscribe(topics::cmd_result(), topics::kCmdResultQos);
  station_.set_audit_hook([this](const AuditEntry& entry) {
    if (!trace_) return;
    Json fields = to_json_value(entry);
    fields.erase("t_us");
    trace_->record(entry.t_us, "audit", fields);
  });
}

void GcsNode::trace(std::uint64_t t_us, std::string_view kind, const Json& fields) {
  if (trace_) trace_->record(t_us, kind, fields);
}

void GcsNode::ingest(std::uint64_t now_us) {
  if (host_) {
    for (const auto& e : heartbeat_sub_->drain()) host_->on_heartbeat(e, now_us);
    for (const auto& e : operator_sub_->drain()) host_->on_operator(e, now_us, true);
  }
  for (const auto& e : state_sub_->drain()) {
    try {
      const auto snapshot = decode_payload<SwarmSnapshot>(e.payload);
      station_.on_snapshot(snapshot, now_us);
      feed_.publish(snapshot, now_us);
    } catch (const InvalidArgument& err) {
      bad_payload(trace_, now_us, bus_->self(), e, err.what());
    }
  }
  for (const auto& e : result_sub_->drain()) {
    try {
      station_.on_outcome(decode_payload<CommandOutcome>(e.payload), now_us);
    } catch (const InvalidArgument& err) {
      bad_payload(trace_, now_us, bus_->self(), e, err.what());
    }
  }
}

void GcsNode::coordinate(std::uint64_t now_us) {
  if (host_) host_->run(now_us);
}

}  // namespace swarmlink
