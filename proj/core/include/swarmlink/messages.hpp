#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "swarmlink/middleware/envelope.hpp"
#include "swarmlink/model.hpp"
#include "swarmlink/vehicle.hpp"

namespace swarmlink {

/// Topic names and their QoS.
namespace topics {
mw::TopicName heartbeat();     // swarm/heartbeat
mw::TopicName swarm_state();   // swarm/state
mw::TopicName gcs_cmd();       // gcs/cmd
mw::TopicName cmd_result();    // swarm/cmd_result
mw::TopicName uav_cmd(UavId id);        // uav/<id>/cmd
mw::TopicName uav_telemetry(UavId id);  // uav/<id>/telemetry
mw::TopicName uav_gimbal_cmd(UavId id); // uav/<id>/gimbal_cmd
mw::TopicName uav_frames(UavId id);     // uav/<id>/frames
mw::TopicName uav_detections(UavId id); // uav/<id>/detections

inline const mw::QosProfile kHeartbeatQos = mw::QosProfile::best_effort(8);
inline const mw::QosProfile kStateQos = mw::QosProfile::best_effort(1);
inline const mw::QosProfile kGcsCmdQos = mw::QosProfile::reliable(16);
inline const mw::QosProfile kCmdResultQos = mw::QosProfile::best_effort(16);
inline const mw::QosProfile kUavCmdQos = mw::QosProfile::reliable(16);
inline const mw::QosProfile kTelemetryQos = mw::QosProfile::best_effort(1);
inline const mw::QosProfile kGimbalCmdQos = mw::QosProfile::reliable(4);
inline const mw::QosProfile kFramesQos = mw::QosProfile::best_effort(1);
inline const mw::QosProfile kDetectionsQos = mw::QosProfile::best_effort(4);

/// Extracts <id> from "uav/<id>/..." topics.
std::optional<UavId> uav_of(const mw::TopicName& topic);
}  // namespace topics

struct Heartbeat {
  UavId id;
  UavClass uav_class = UavClass::Generic;
  MissionState mission_state = MissionState::Init;
  Pose pose;
  std::uint64_t seq = 0;

  friend bool operator==(const Heartbeat&, const Heartbeat&) = default;
};

struct Telemetry {
  UavId id;
  VehicleState state;
  MissionState mission_state = MissionState::Init;

  friend bool operator==(const Telemetry&, const Telemetry&) = default;
};

/// Per-UAV command vocabulary: the vehicle's offboard commands plus the
/// mission-level hold / offboard / rtl requests.
enum class UavAction : std::uint8_t { Arm, Disarm, Takeoff, Land, Hold, Offboard, Rtl, SetSetpoint };

std::string_view to_string(UavAction action) noexcept;
std::optional<UavAction> uav_action_from_string(std::string_view text) noexcept;

struct UavCommand {
  UavAction action = UavAction::Hold;
  std::optional<Setpoint> setpoint;  // required for SetSetpoint
  std::uint64_t command_id = 0;      // operator command that caused this, 0 if none

  friend bool operator==(const UavCommand&, const UavCommand&) = default;
};

struct GimbalCommand {
  Vec3 target;
  std::uint64_t command_id = 0;

  friend bool operator==(const GimbalCommand&, const GimbalCommand&) = default;
};

struct CommandOutcome {
  UavId uav;
  std::uint64_t command_id = 0;
  UavAction action = UavAction::Hold;
  bool accepted = true;
  std::string reason;

  friend bool operator==(const CommandOutcome&, const CommandOutcome&) = default;
};

namespace op {
struct ArmAll {
  friend bool operator==(const ArmAll&, const ArmAll&) = default;
};
struct TakeoffAll {
  friend bool operator==(const TakeoffAll&, const TakeoffAll&) = default;
};
struct EngageOffboardAll {
  friend bool operator==(const EngageOffboardAll&, const EngageOffboardAll&) = default;
};
struct RtlAll {
  friend bool operator==(const RtlAll&, const RtlAll&) = default;
};
struct LandAll {
  friend bool operator==(const LandAll&, const LandAll&) = default;
};
struct SetFormation {
  FormationSpec spec;
  friend bool operator==(const SetFormation&, const SetFormation&) = default;
};
struct SetLeader {
  UavId id;
  friend bool operator==(const SetLeader&, const SetLeader&) = default;
};
struct LeaderWaypoint {
  Setpoint setpoint;
  friend bool operator==(const LeaderWaypoint&, const LeaderWaypoint&) = default;
};
struct ForUav {
  UavId id;
  UavCommand command;
  friend bool operator==(const ForUav&, const ForUav&) = default;
};
struct GimbalPoint {
  UavId id;
  Vec3 target;
  friend bool operator==(const GimbalPoint&, const GimbalPoint&) = default;
};
}  // namespace op

using OperatorCommand = std::variant<op::ArmAll, op::TakeoffAll, op::EngageOffboardAll, op::RtlAll, op::LandAll,
                                     op::SetFormation, op::SetLeader, op::LeaderWaypoint, op::ForUav,
                                     op::GimbalPoint>;

std::string_view action_name(const OperatorCommand& command) noexcept;

/// Payload of gcs/cmd.
struct GcsCommand {
  std::uint64_t command_id = 0;
  OperatorCommand command;

  friend bool operator==(const GcsCommand&, const GcsCommand&) = default;
};

}  // namespace swarmlink
