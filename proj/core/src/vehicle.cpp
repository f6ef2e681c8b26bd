#include "swarmlink/vehicle.hpp"

#include <algorithm>
#include <cmath>

#include "swarmlink/errors.hpp"

namespace swarmlink {

void VehicleParams::validate() const {
  for (double v : {max_horizontal_speed_mps, max_vertical_speed_mps, max_yaw_rate_rps, takeoff_altitude_m,
                   takeoff_tolerance_m, landing_tolerance_m}) {
    if (!std::isfinite(v) || v <= 0.0) throw InvalidArgument("vehicle parameters must be positive and finite");
  }
}

VehicleState step_vehicle(const VehicleState& state, const std::optional<Setpoint>& setpoint,
                          const VehicleParams& params, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be > 0");

  VehicleState next = state;
  next.velocity = {};
  if (!setpoint || !state.armed) return next;

  const Vec3 error = setpoint->position - state.pose.position;

  Vec3 move{error.x, error.y, 0.0};
  const double horizontal = error.horizontal_norm();
  const double max_h = params.max_horizontal_speed_mps * dt;
  if (horizontal > max_h) {
    const double scale = max_h / horizontal;
    move.x *= scale;
    move.y *= scale;
  }
  const double max_v = params.max_vertical_speed_mps * dt;
  move.z = std::clamp(error.z, -max_v, max_v);

  next.pose.position = state.pose.position + move;
  // Exact arrival when within reach avoids accumulating rounding residue.
  if (horizontal <= max_h) {
    next.pose.position.x = setpoint->position.x;
    next.pose.position.y = setpoint->position.y;
  }
  if (std::abs(error.z) <= max_v) next.pose.position.z = setpoint->position.z;

  const double yaw_error = normalize_yaw(setpoint->yaw - state.pose.yaw);
  const double max_turn = params.max_yaw_rate_rps * dt;
  const double turn = std::clamp(yaw_error, -max_turn, max_turn);
  next.pose.yaw = std::abs(yaw_error) <= max_turn ? normalize_yaw(setpoint->yaw) : normalize_yaw(state.pose.yaw + turn);

  next.velocity = (next.pose.position - state.pose.position) * (1.0 / dt);
  return next;
}

std::string_view command_name(const VehicleCommand& command) noexcept {
  struct Visitor {
    std::string_view operator()(const cmd::Arm&) const { return "arm"; }
    std::string_view operator()(const cmd::Disarm&) const { return "disarm"; }
    std::string_view operator()(const cmd::Takeoff&) const { return "takeoff"; }
    std::string_view operator()(const cmd::Land&) const { return "land"; }
    std::string_view operator()(const cmd::SetSetpoint&) const { return "set_setpoint"; }
  };
  return std::visit(Visitor{}, command);
}

Vehicle::Vehicle(Vec3 start_position, VehicleParams params, double start_yaw) : params_(params) {
  params_.validate();
  if (!start_position.finite()) throw InvalidArgument("start position must be finite");
  state_.pose.position = start_position;
  state_.pose.yaw = normalize_yaw(start_yaw);
}

CommandResult Vehicle::offboard_command(const VehicleCommand& command) {
  const bool in_air = phase_ != FlightPhase::Ground;

  if (std::holds_alternative<cmd::Arm>(command)) {
    if (in_air) return CommandResult::rejected("airborne");
    state_.armed = true;
    return CommandResult::ok();
  }
  if (std::holds_alternative<cmd::Disarm>(command)) {
    if (in_air) return CommandResult::rejected("airborne");
    state_.armed = false;
    state_.velocity = {};
    setpoint_.reset();
    return CommandResult::ok();
  }
  if (std::holds_alternative<cmd::Takeoff>(command)) {
    if (!state_.armed) return CommandResult::rejected("not armed");
    if (in_air) return CommandResult::rejected("not on ground");
    const auto& p = state_.pose.position;
    setpoint_ = Setpoint{{p.x, p.y, -params_.takeoff_altitude_m}, state_.pose.yaw};
    phase_ = FlightPhase::Climbing;
    return CommandResult::ok();
  }
  if (std::holds_alternative<cmd::Land>(command)) {
    if (!in_air) return CommandResult::rejected("not airborne");
    const auto& p = state_.pose.position;
    setpoint_ = Setpoint{{p.x, p.y, 0.0}, state_.pose.yaw};
    phase_ = FlightPhase::Descending;
    return CommandResult::ok();
  }
  const auto& sp = std::get<cmd::SetSetpoint>(command).setpoint;
  if (!state_.airborne) return CommandResult::rejected("not airborne");
  if (phase_ == FlightPhase::Descending) return CommandResult::rejected("landing");
  if (!sp.position.finite() || !std::isfinite(sp.yaw)) return CommandResult::rejected("non-finite setpoint");
  setpoint_ = Setpoint{sp.position, normalize_yaw(sp.yaw)};
  return CommandResult::ok();
}

void Vehicle::step(double dt) {
  state_ = step_vehicle(state_, setpoint_, params_, dt);
  const double down = state_.pose.position.z;
  if (phase_ == FlightPhase::Climbing && std::abs(down + params_.takeoff_altitude_m) < params_.takeoff_tolerance_m) {
    phase_ = FlightPhase::Flying;
    state_.airborne = true;
  } else if (phase_ == FlightPhase::Descending && std::abs(down) < params_.landing_tolerance_m) {
    phase_ = FlightPhase::Ground;
    state_.airborne = false;
  }
}

}  // namespace swarmlink
