#include "swarmlink/text.hpp"

#include <cmath>

namespace swarmlink {

namespace {

template <typename E, typename Parse>
E enum_from(const Json& j, Parse parse, const char* what) {
  const auto text = j.get<std::string>();
  if (auto v = parse(text)) return *v;
  throw InvalidArgument(std::string("unknown ") + what + " '" + text + "'");
}

double finite_number(const Json& j, const char* field) {
  const auto v = j.at(field).get<double>();
  if (!std::isfinite(v)) throw InvalidArgument(std::string("field '") + field + "' is not finite");
  return v;
}

template <typename T>
T field_or(const Json& j, const char* field, T fallback) {
  auto it = j.find(field);
  return it == j.end() || it->is_null() ? fallback : it->template get<T>();
}

}  // namespace

void to_json(Json& j, const UavId& id) { j = id.value(); }
void from_json(const Json& j, UavId& id) {
  if (!j.is_number_integer()) throw InvalidArgument("uav id must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < 1 || v > 65535) throw InvalidArgument("uav id " + std::to_string(v) + " outside 1..65535");
  id = UavId(static_cast<std::uint32_t>(v));
}

void to_json(Json& j, const Vec3& v) { j = Json::array({v.x, v.y, v.z}); }
void from_json(const Json& j, Vec3& v) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument("vector must be [x, y, z]");
  v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  if (!v.finite()) throw InvalidArgument("vector components must be finite");
}

void to_json(Json& j, const Pose& p) { j = Json{{"position", p.position}, {"yaw", p.yaw}}; }
void from_json(const Json& j, Pose& p) {
  p.position = j.at("position").get<Vec3>();
  p.yaw = normalize_yaw(finite_number(j, "yaw"));
}

void to_json(Json& j, UavClass c) { j = std::string(to_string(c)); }
void from_json(const Json& j, UavClass& c) { c = enum_from<UavClass>(j, uav_class_from_string, "uav class"); }

void to_json(Json& j, MissionState s) { j = std::string(to_string(s)); }
void from_json(const Json& j, MissionState& s) {
  s = enum_from<MissionState>(j, mission_state_from_string, "mission state");
}

void to_json(Json& j, MissionEvent e) { j = std::string(to_string(e)); }
void from_json(const Json& j, MissionEvent& e) {
  e = enum_from<MissionEvent>(j, mission_event_from_string, "mission event");
}

void to_json(Json& j, Geometry g) { j = std::string(to_string(g)); }
void from_json(const Json& j, Geometry& g) { g = enum_from<Geometry>(j, geometry_from_string, "geometry"); }

void to_json(Json& j, const SwarmRole& r) {
  switch (r.kind) {
    case RoleKind::Leader: j = Json{{"variant", "leader"}}; return;
    case RoleKind::Follower: j = Json{{"variant", "follower"}, {"slot", r.slot}}; return;
    case RoleKind::Unassigned: j = Json{{"variant", "unassigned"}}; return;
  }
}
void from_json(const Json& j, SwarmRole& r) {
  const auto variant = j.at("variant").get<std::string>();
  if (variant == "leader") {
    r = SwarmRole::leader();
  } else if (variant == "unassigned") {
    r = SwarmRole::unassigned();
  } else if (variant == "follower") {
    const auto slot = j.at("slot").get<std::uint32_t>();
    if (slot == 0) throw InvalidArgument("follower slot must be >= 1");
    r = SwarmRole::follower(slot);
  } else {
    throw InvalidArgument("unknown role variant '" + variant + "'");
  }
}

void to_json(Json& j, const FormationSpec& f) {
  j = Json{{"geometry", f.geometry}, {"spacing_m", f.spacing_m}, {"altitude_offset_m", f.altitude_offset_m}};
}
void from_json(const Json& j, FormationSpec& f) {
  f.geometry = j.at("geometry").get<Geometry>();
  f.spacing_m = j.at("spacing_m").get<double>();
  f.altitude_offset_m = field_or(j, "altitude_offset_m", 0.0);
}

void to_json(Json& j, const MemberView& m) {
  j = Json{{"id", m.id},     {"class", m.uav_class}, {"role", m.role}, {"mission_state", m.mission_state},
           {"pose", m.pose}, {"last_seen_us", m.last_seen_us}};
}
void from_json(const Json& j, MemberView& m) {
  m.id = j.at("id").get<UavId>();
  m.uav_class = j.at("class").get<UavClass>();
  m.role = j.at("role").get<SwarmRole>();
  m.mission_state = j.at("mission_state").get<MissionState>();
  m.pose = j.at("pose").get<Pose>();
  m.last_seen_us = j.at("last_seen_us").get<std::uint64_t>();
}

void to_json(Json& j, const SwarmSnapshot& s) {
  j = Json{{"timestamp_us", s.timestamp_us},
           {"members", s.members},
           {"formation", s.formation ? Json(*s.formation) : Json(nullptr)},
           {"leader", s.leader ? Json(*s.leader) : Json(nullptr)}};
}
void from_json(const Json& j, SwarmSnapshot& s) {
  s.timestamp_us = j.at("timestamp_us").get<std::uint64_t>();
  s.members = j.at("members").get<std::vector<MemberView>>();
  const auto& f = j.at("formation");
  s.formation = f.is_null() ? std::nullopt : std::optional(f.get<FormationSpec>());
  const auto& l = j.at("leader");
  s.leader = l.is_null() ? std::nullopt : std::optional(l.get<UavId>());
}

void to_json(Json& j, const Setpoint& s) { j = Json{{"position", s.position}, {"yaw", s.yaw}}; }
void from_json(const Json& j, Setpoint& s) {
  s.position = j.at("position").get<Vec3>();
  s.yaw = normalize_yaw(field_or(j, "yaw", 0.0));
}

void to_json(Json& j, const VehicleState& s) {
  j = Json{{"pose", s.pose}, {"velocity", s.velocity}, {"armed", s.armed}, {"airborne", s.airborne}};
}
void from_json(const Json& j, VehicleState& s) {
  s.pose = j.at("pose").get<Pose>();
  s.velocity = j.at("velocity").get<Vec3>();
  s.armed = j.at("armed").get<bool>();
  s.airborne = j.at("airborne").get<bool>();
}

void to_json(Json& j, const Heartbeat& h) {
  j = Json{{"id", h.id}, {"class", h.uav_class}, {"mission_state", h.mission_state}, {"pose", h.pose}, {"seq", h.seq}};
}
void from_json(const Json& j, Heartbeat& h) {
  h.id = j.at("id").get<UavId>();
  h.uav_class = j.at("class").get<UavClass>();
  h.mission_state = j.at("mission_state").get<MissionState>();
  h.pose = j.at("pose").get<Pose>();
  h.seq = j.at("seq").get<std::uint64_t>();
}

void to_json(Json& j, const Telemetry& t) {
  j = Json{{"id", t.id}, {"state", t.state}, {"mission_state", t.mission_state}};
}
void from_json(const Json& j, Telemetry& t) {
  t.id = j.at("id").get<UavId>();
  t.state = j.at("state").get<VehicleState>();
  t.mission_state = j.at("mission_state").get<MissionState>();
}

void to_json(Json& j, UavAction a) { j = std::string(to_string(a)); }
void from_json(const Json& j, UavAction& a) { a = enum_from<UavAction>(j, uav_action_from_string, "uav action"); }

void to_json(Json& j, const UavCommand& c) {
  j = Json{{"action", c.action}};
  if (c.setpoint) j["setpoint"] = *c.setpoint;
  j["command_id"] = c.command_id;
}
void from_json(const Json& j, UavCommand& c) {
  c.action = j.at("action").get<UavAction>();
  auto sp = j.find("setpoint");
  c.setpoint = sp == j.end() || sp->is_null() ? std::nullopt : std::optional(sp->get<Setpoint>());
  if (c.action == UavAction::SetSetpoint && !c.setpoint) throw InvalidArgument("set_setpoint requires 'setpoint'");
  c.command_id = field_or<std::uint64_t>(j, "command_id", 0);
}

void to_json(Json& j, const GimbalCommand& c) { j = Json{{"target", c.target}, {"command_id", c.command_id}}; }
void from_json(const Json& j, GimbalCommand& c) {
  c.target = j.at("target").get<Vec3>();
  c.command_id = field_or<std::uint64_t>(j, "command_id", 0);
}

void to_json(Json& j, const CommandOutcome& o) {
  j = Json{{"uav", o.uav},
           {"command_id", o.command_id},
           {"action", o.action},
           {"accepted", o.accepted},
           {"reason", o.reason}};
}
void from_json(const Json& j, CommandOutcome& o) {
  o.uav = j.at("uav").get<UavId>();
  o.command_id = j.at("command_id").get<std::uint64_t>();
  o.action = j.at("action").get<UavAction>();
  o.accepted = j.at("accepted").get<bool>();
  o.reason = field_or<std::string>(j, "reason", "");
}

void to_json(Json& j, const OperatorCommand& c) {
  j = Json{{"action", std::string(action_name(c))}};
  std::visit(
      [&j](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, op::SetFormation>) {
          j["formation"] = v.spec;
        } else if constexpr (std::is_same_v<T, op::SetLeader>) {
          j["id"] = v.id;
        } else if constexpr (std::is_same_v<T, op::LeaderWaypoint>) {
          j["setpoint"] = v.setpoint;
        } else if constexpr (std::is_same_v<T, op::ForUav>) {
          j["id"] = v.id;
          j["command"] = v.command;
        } else if constexpr (std::is_same_v<T, op::GimbalPoint>) {
          j["id"] = v.id;
          j["target"] = v.target;
        }
      },
      c);
}
void from_json(const Json& j, OperatorCommand& c) {
  const auto action = j.at("action").get<std::string>();
  if (action == "arm_all") {
    c = op::ArmAll{};
  } else if (action == "takeoff_all") {
    c = op::TakeoffAll{};
  } else if (action == "offboard_all") {
    c = op::EngageOffboardAll{};
  } else if (action == "rtl_all") {
    c = op::RtlAll{};
  } else if (action == "land_all") {
    c = op::LandAll{};
  } else if (action == "set_formation") {
    c = op::SetFormation{j.at("formation").get<FormationSpec>()};
  } else if (action == "set_leader") {
    c = op::SetLeader{j.at("id").get<UavId>()};
  } else if (action == "leader_waypoint") {
    c = op::LeaderWaypoint{j.at("setpoint").get<Setpoint>()};
  } else if (action == "uav_command") {
    c = op::ForUav{j.at("id").get<UavId>(), j.at("command").get<UavCommand>()};
  } else if (action == "gimbal_point") {
    c = op::GimbalPoint{j.at("id").get<UavId>(), j.at("target").get<Vec3>()};
  } else {
    throw InvalidArgument("unknown operator action '" + action + "'");
  }
}

void to_json(Json& j, const GcsCommand& c) { j = Json{{"command_id", c.command_id}, {"command", c.command}}; }
void from_json(const Json& j, GcsCommand& c) {
  c.command_id = j.at("command_id").get<std::uint64_t>();
  c.command = j.at("command").get<OperatorCommand>();
}

void to_json(Json& j, const GimbalState& g) { j = Json{{"pan", g.pan}, {"tilt", g.tilt}, {"zoom", g.zoom}}; }
void from_json(const Json& j, GimbalState& g) {
  g.pan = finite_number(j, "pan");
  g.tilt = finite_number(j, "tilt");
  g.zoom = field_or(j, "zoom", 1.0);
}

void to_json(Json& j, const FrameMeta& f) {
  j = Json{{"seq", f.seq},
           {"timestamp_us", f.timestamp_us},
           {"width", f.width},
           {"height", f.height},
           {"source_uav", f.source_uav}};
}
void from_json(const Json& j, FrameMeta& f) {
  f.seq = j.at("seq").get<std::uint64_t>();
  f.timestamp_us = j.at("timestamp_us").get<std::uint64_t>();
  f.width = j.at("width").get<std::uint32_t>();
  f.height = j.at("height").get<std::uint32_t>();
  f.source_uav = j.at("source_uav").get<UavId>();
}

void to_json(Json& j, const Detection& d) {
  j = Json{{"track_id", d.track_id}, {"bearing", d.bearing}, {"elevation", d.elevation}, {"confidence", d.confidence}};
}
void from_json(const Json& j, Detection& d) {
  d.track_id = j.at("track_id").get<std::uint32_t>();
  d.bearing = finite_number(j, "bearing");
  d.elevation = finite_number(j, "elevation");
  d.confidence = finite_number(j, "confidence");
  if (d.confidence < 0.0 || d.confidence > 1.0) throw InvalidArgument("confidence must be in [0, 1]");
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(e.what());
  }
}

}  // namespace swarmlink
