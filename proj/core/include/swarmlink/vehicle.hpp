#pragma once

#include <optional>
#include <string>
#include <variant>

#include "swarmlink/model.hpp"

namespace swarmlink {

struct VehicleParams {
  double max_horizontal_speed_mps = 8.0;
  double max_vertical_speed_mps = 2.0;
  double max_yaw_rate_rps = 1.5;
  double takeoff_altitude_m = 10.0;  // climbs to down = -takeoff_altitude_m
  double takeoff_tolerance_m = 0.5;
  double landing_tolerance_m = 0.2;

  /// Throws InvalidArgument unless every field is positive and finite.
  void validate() const;
};

struct Setpoint {
  Vec3 position;
  double yaw = 0.0;

  friend bool operator==(const Setpoint&, const Setpoint&) = default;
};

struct VehicleState {
  Pose pose;
  Velocity velocity;
  bool armed = false;
  bool airborne = false;

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// First-order kinematics: the horizontal and vertical components of the
/// step toward the setpoint are clamped independently to speed * dt, and yaw
/// turns along the shorter arc at most max_yaw_rate * dt. With no setpoint
/// or while disarmed only the velocity changes (to zero).
/// Throws InvalidArgument when dt <= 0.
VehicleState step_vehicle(const VehicleState& state, const std::optional<Setpoint>& setpoint,
                          const VehicleParams& params, double dt);

namespace cmd {
struct Arm {};
struct Disarm {};
struct Takeoff {};
struct Land {};
struct SetSetpoint {
  Setpoint setpoint;
};
}  // namespace cmd

using VehicleCommand = std::variant<cmd::Arm, cmd::Disarm, cmd::Takeoff, cmd::Land, cmd::SetSetpoint>;

std::string_view command_name(const VehicleCommand& command) noexcept;

struct CommandResult {
  bool accepted = true;
  std::string reason;

  static CommandResult ok() { return {}; }
  static CommandResult rejected(std::string why) { return {false, std::move(why)}; }
};

enum class FlightPhase { Ground, Climbing, Flying, Descending };

/// Simulated flight controller plus the offboard command surface.
class Vehicle {
 public:
  explicit Vehicle(Vec3 start_position, VehicleParams params = {}, double start_yaw = 0.0);

  /// A rejected command never changes state.
  CommandResult offboard_command(const VehicleCommand& command);

  /// Advances time by dt seconds and updates takeoff/landing completion.
  void step(double dt);

  const VehicleState& state() const noexcept { return state_; }
  const VehicleParams& params() const noexcept { return params_; }
  const std::optional<Setpoint>& setpoint() const noexcept { return setpoint_; }
  FlightPhase phase() const noexcept { return phase_; }
  bool on_ground() const noexcept { return phase_ == FlightPhase::Ground; }

 private:
  VehicleParams params_;
  VehicleState state_;
  std::optional<Setpoint> setpoint_;
  FlightPhase phase_ = FlightPhase::Ground;
};

}  // namespace swarmlink
