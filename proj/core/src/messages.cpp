#include "swarmlink/messages.hpp"

#include <array>
#include <charconv>

namespace swarmlink {

namespace topics {

namespace {
mw::TopicName per_uav(UavId id, const char* leaf) {
  return mw::TopicName("uav/" + std::to_string(id.value()) + "/" + leaf);
}
}  // namespace

mw::TopicName heartbeat() { return mw::TopicName("swarm/heartbeat"); }
mw::TopicName swarm_state() { return mw::TopicName("swarm/state"); }
mw::TopicName gcs_cmd() { return mw::TopicName("gcs/cmd"); }
mw::TopicName cmd_result() { return mw::TopicName("swarm/cmd_result"); }
mw::TopicName uav_cmd(UavId id) { return per_uav(id, "cmd"); }
mw::TopicName uav_telemetry(UavId id) { return per_uav(id, "telemetry"); }
mw::TopicName uav_gimbal_cmd(UavId id) { return per_uav(id, "gimbal_cmd"); }
mw::TopicName uav_frames(UavId id) { return per_uav(id, "frames"); }
mw::TopicName uav_detections(UavId id) { return per_uav(id, "detections"); }

std::optional<UavId> uav_of(const mw::TopicName& topic) {
  const std::string& s = topic.str();
  if (s.rfind("uav/", 0) != 0) return std::nullopt;
  const auto end = s.find('/', 4);
  if (end == std::string::npos) return std::nullopt;
  std::uint32_t value = 0;
  const char* first = s.data() + 4;
  const char* last = s.data() + end;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || value == 0 || value > 65535) return std::nullopt;
  return UavId(value);
}

}  // namespace topics

namespace {
constexpr std::array<std::pair<UavAction, std::string_view>, 8> kActionNames = {{
    {UavAction::Arm, "arm"},
    {UavAction::Disarm, "disarm"},
    {UavAction::Takeoff, "takeoff"},
    {UavAction::Land, "land"},
    {UavAction::Hold, "hold"},
    {UavAction::Offboard, "offboard"},
    {UavAction::Rtl, "rtl"},
    {UavAction::SetSetpoint, "set_setpoint"},
}};
}  // namespace

std::string_view to_string(UavAction action) noexcept {
  for (const auto& [a, name] : kActionNames) {
    if (a == action) return name;
  }
  return "hold";
}

std::optional<UavAction> uav_action_from_string(std::string_view text) noexcept {
  for (const auto& [a, name] : kActionNames) {
    if (name == text) return a;
  }
  return std::nullopt;
}

std::string_view action_name(const OperatorCommand& command) noexcept {
  struct Name {
    std::string_view operator()(const op::ArmAll&) const { return "arm_all"; }
    std::string_view operator()(const op::TakeoffAll&) const { return "takeoff_all"; }
    std::string_view operator()(const op::EngageOffboardAll&) const { return "offboard_all"; }
    std::string_view operator()(const op::RtlAll&) const { return "rtl_all"; }
    std::string_view operator()(const op::LandAll&) const { return "land_all"; }
    std::string_view operator()(const op::SetFormation&) const { return "set_formation"; }
    std::string_view operator()(const op::SetLeader&) const { return "set_leader"; }
    std::string_view operator()(const op::LeaderWaypoint&) const { return "leader_waypoint"; }
    std::string_view operator()(const op::ForUav&) const { return "uav_command"; }
    std::string_view operator()(const op::GimbalPoint&) const { return "gimbal_point"; }
  };
  return std::visit(Name{}, command);
}

}  // namespace swarmlink
