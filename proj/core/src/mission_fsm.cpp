#include "swarmlink/mission_fsm.hpp"

namespace swarmlink {

std::string_view to_string(MissionState state) noexcept {
  switch (state) {
    case MissionState::Init: return "init";
    case MissionState::Connected: return "connected";
    case MissionState::Armed: return "armed";
    case MissionState::TakingOff: return "taking_off";
    case MissionState::Hold: return "hold";
    case MissionState::Offboard: return "offboard";
    case MissionState::ReturnToLaunch: return "return_to_launch";
    case MissionState::Landing: return "landing";
    case MissionState::Disarmed: return "disarmed";
    case MissionState::Failsafe: return "failsafe";
  }
  return "init";
}

std::string_view to_string(MissionEvent event) noexcept {
  switch (event) {
    case MissionEvent::LinkUp: return "link_up";
    case MissionEvent::ArmCmd: return "arm_cmd";
    case MissionEvent::TakeoffCmd: return "takeoff_cmd";
    case MissionEvent::TakeoffComplete: return "takeoff_complete";
    case MissionEvent::EngageOffboard: return "engage_offboard";
    case MissionEvent::HoldCmd: return "hold_cmd";
    case MissionEvent::RtlCmd: return "rtl_cmd";
    case MissionEvent::LandCmd: return "land_cmd";
    case MissionEvent::TouchdownDetected: return "touchdown_detected";
    case MissionEvent::DisarmCmd: return "disarm_cmd";
    case MissionEvent::LinkLost: return "link_lost";
    case MissionEvent::LinkRestored: return "link_restored";
  }
  return "link_up";
}

std::optional<MissionState> mission_state_from_string(std::string_view text) noexcept {
  for (auto s : kAllMissionStates) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<MissionEvent> mission_event_from_string(std::string_view text) noexcept {
  for (auto e : kAllMissionEvents) {
    if (to_string(e) == text) return e;
  }
  return std::nullopt;
}

std::optional<MissionState> fsm_transition(MissionState state, MissionEvent event) noexcept {
  using S = MissionState;
  using E = MissionEvent;
  switch (state) {
    case S::Init:
      if (event == E::LinkUp) return S::Connected;
      break;
    case S::Connected:
      if (event == E::ArmCmd) return S::Armed;
      break;
    case S::Armed:
      if (event == E::TakeoffCmd) return S::TakingOff;
      if (event == E::DisarmCmd) return S::Disarmed;
      break;
    case S::TakingOff:
      if (event == E::TakeoffComplete) return S::Hold;
      if (event == E::LinkLost) return S::Failsafe;
      break;
    case S::Hold:
      if (event == E::EngageOffboard) return S::Offboard;
      if (event == E::RtlCmd) return S::ReturnToLaunch;
      if (event == E::LandCmd) return S::Landing;
      if (event == E::LinkLost) return S::Failsafe;
      break;
    case S::Offboard:
      if (event == E::HoldCmd) return S::Hold;
      if (event == E::RtlCmd) return S::ReturnToLaunch;
      if (event == E::LandCmd) return S::Landing;
      if (event == E::LinkLost) return S::Failsafe;
      break;
    case S::ReturnToLaunch:
      if (event == E::LandCmd) return S::Landing;
      break;
    case S::Landing:
      if (event == E::TouchdownDetected) return S::Armed;
      break;
    case S::Disarmed:
      break;
    case S::Failsafe:
      // Behaves as return-to-launch until the link comes back.
      if (event == E::LandCmd) return S::Landing;
      if (event == E::LinkRestored) return S::Hold;
      break;
  }
  return std::nullopt;
}

bool is_link_supervised(MissionState state) noexcept {
  return state == MissionState::TakingOff || state == MissionState::Hold || state == MissionState::Offboard;
}

bool is_airborne_state(MissionState state) noexcept {
  switch (state) {
    case MissionState::TakingOff:
    case MissionState::Hold:
    case MissionState::Offboard:
    case MissionState::ReturnToLaunch:
    case MissionState::Landing:
    case MissionState::Failsafe:
      return true;
    default:
      return false;
  }
}

bool MissionFsm::handle(MissionEvent event) {
  if (auto next = fsm_transition(state_, event)) {
    state_ = *next;
    return true;
  }
  if (rejections_.size() >= 1024) rejections_.erase(rejections_.begin());
  rejections_.push_back({state_, event});
  return false;
}

}  // namespace swarmlink
