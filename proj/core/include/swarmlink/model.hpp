#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swarmlink/mission_fsm.hpp"

namespace swarmlink {

/// Middleware node address. 0 is the ground station; UAVs use their UavId.
using NodeId = std::uint16_t;
inline constexpr NodeId kGroundStationNode = 0;

inline constexpr double kPi = 3.14159265358979323846;

class UavId {
 public:
  constexpr UavId() = default;
  /// Throws InvalidArgument for 0.
  explicit UavId(std::uint32_t value);

  constexpr std::uint16_t value() const noexcept { return value_; }
  constexpr NodeId node() const noexcept { return value_; }
  constexpr bool valid() const noexcept { return value_ != 0; }

  friend constexpr auto operator<=>(const UavId&, const UavId&) = default;

 private:
  std::uint16_t value_ = 0;
};

enum class UavClass : std::uint8_t { Generic, Observation, Coordinator };

std::string_view to_string(UavClass cls) noexcept;
std::optional<UavClass> uav_class_from_string(std::string_view text) noexcept;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  constexpr Vec3 operator+(const Vec3& o) const noexcept { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const noexcept { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const noexcept { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) noexcept {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }

  double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
  double horizontal_norm() const noexcept { return std::hypot(x, y); }
  bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// NED velocity, m/s.
using Velocity = Vec3;

/// Rotation about the down axis: (x, y) -> (x cos - y sin, x sin + y cos).
Vec3 rotate_z(const Vec3& v, double angle) noexcept;

/// Maps any finite angle into (-pi, pi]. Throws InvalidArgument when not finite.
double normalize_yaw(double yaw);

/// Position in the NED world frame (metres) plus heading, 0 = north,
/// positive clockwise seen from above.
struct Pose {
  Vec3 position;
  double yaw = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;

  bool valid() const noexcept;
};

enum class RoleKind : std::uint8_t { Unassigned, Leader, Follower };

struct SwarmRole {
  RoleKind kind = RoleKind::Unassigned;
  std::uint32_t slot = 0;  // >= 1 for followers, 0 otherwise

  static SwarmRole leader() noexcept { return {RoleKind::Leader, 0}; }
  static SwarmRole follower(std::uint32_t slot) noexcept { return {RoleKind::Follower, slot}; }
  static SwarmRole unassigned() noexcept { return {}; }

  friend bool operator==(const SwarmRole&, const SwarmRole&) = default;
};

enum class Geometry : std::uint8_t { Line, Column, Wedge, Circle };

std::string_view to_string(Geometry geometry) noexcept;
std::optional<Geometry> geometry_from_string(std::string_view text) noexcept;

struct FormationSpec {
  Geometry geometry = Geometry::Line;
  double spacing_m = 10.0;
  double altitude_offset_m = 0.0;  // down-positive

  friend bool operator==(const FormationSpec&, const FormationSpec&) = default;

  bool valid() const noexcept;
};

struct MemberView {
  UavId id;
  UavClass uav_class = UavClass::Generic;
  SwarmRole role;
  MissionState mission_state = MissionState::Init;
  Pose pose;
  std::uint64_t last_seen_us = 0;

  friend bool operator==(const MemberView&, const MemberView&) = default;
};

/// The coordinator's authoritative view of the swarm.
struct SwarmSnapshot {
  std::uint64_t timestamp_us = 0;
  std::vector<MemberView> members;
  std::optional<FormationSpec> formation;
  std::optional<UavId> leader;

  friend bool operator==(const SwarmSnapshot&, const SwarmSnapshot&) = default;

  /// Returns a description of the first violated invariant, or nullopt.
  std::optional<std::string> validate() const;

  const MemberView* find(UavId id) const noexcept;
};

}  // namespace swarmlink
