#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace swarmlink {

enum class MissionState : std::uint8_t {
  Init,
  Connected,
  Armed,
  TakingOff,
  Hold,
  Offboard,
  ReturnToLaunch,
  Landing,
  Disarmed,
  Failsafe,
};

enum class MissionEvent : std::uint8_t {
  LinkUp,
  ArmCmd,
  TakeoffCmd,
  TakeoffComplete,
  EngageOffboard,
  HoldCmd,
  RtlCmd,
  LandCmd,
  TouchdownDetected,
  DisarmCmd,
  LinkLost,
  LinkRestored,
};

inline constexpr std::array<MissionState, 10> kAllMissionStates = {
    MissionState::Init,    MissionState::Connected,      MissionState::Armed,
    MissionState::TakingOff, MissionState::Hold,         MissionState::Offboard,
    MissionState::ReturnToLaunch, MissionState::Landing, MissionState::Disarmed,
    MissionState::Failsafe,
};

inline constexpr std::array<MissionEvent, 12> kAllMissionEvents = {
    MissionEvent::LinkUp,          MissionEvent::ArmCmd,         MissionEvent::TakeoffCmd,
    MissionEvent::TakeoffComplete, MissionEvent::EngageOffboard, MissionEvent::HoldCmd,
    MissionEvent::RtlCmd,          MissionEvent::LandCmd,        MissionEvent::TouchdownDetected,
    MissionEvent::DisarmCmd,       MissionEvent::LinkLost,       MissionEvent::LinkRestored,
};

std::string_view to_string(MissionState state) noexcept;
std::string_view to_string(MissionEvent event) noexcept;
std::optional<MissionState> mission_state_from_string(std::string_view text) noexcept;
std::optional<MissionEvent> mission_event_from_string(std::string_view text) noexcept;

/// The mission transition table. nullopt means the event is rejected in
/// `state`; a rejection never changes state.
std::optional<MissionState> fsm_transition(MissionState state, MissionEvent event) noexcept;

/// States in which the vehicle is expected to be in the air and under
/// operator or formation control. Each of them accepts LinkLost.
bool is_link_supervised(MissionState state) noexcept;

/// True for states that only exist while the vehicle is flying.
bool is_airborne_state(MissionState state) noexcept;

struct FsmRejection {
  MissionState state;
  MissionEvent event;
};

/// Stateful wrapper owned by one vehicle. Keeps a bounded record of
/// rejections for the audit trail.
class MissionFsm {
 public:
  explicit MissionFsm(MissionState initial = MissionState::Init) : state_(initial) {}

  MissionState state() const noexcept { return state_; }

  /// Applies `event`; returns true when accepted.
  bool handle(MissionEvent event);

  /// Would `event` be accepted right now?
  bool accepts(MissionEvent event) const noexcept { return fsm_transition(state_, event).has_value(); }

  const std::vector<FsmRejection>& rejections() const noexcept { return rejections_; }

 private:
  MissionState state_;
  std::vector<FsmRejection> rejections_;
};

}  // namespace swarmlink
