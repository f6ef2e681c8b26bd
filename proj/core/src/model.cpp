#include "swarmlink/model.hpp"

#include <algorithm>
#include <set>

#include "swarmlink/errors.hpp"

namespace swarmlink {

UavId::UavId(std::uint32_t value) {
  if (value == 0 || value > 65535) {
    throw InvalidArgument("uav id must be in 1..=65535, got " + std::to_string(value));
  }
  value_ = static_cast<std::uint16_t>(value);
}

std::string_view to_string(UavClass cls) noexcept {
  switch (cls) {
    case UavClass::Generic: return "generic";
    case UavClass::Observation: return "observation";
    case UavClass::Coordinator: return "coordinator";
  }
  return "generic";
}

std::optional<UavClass> uav_class_from_string(std::string_view text) noexcept {
  for (auto cls : {UavClass::Generic, UavClass::Observation, UavClass::Coordinator}) {
    if (to_string(cls) == text) return cls;
  }
  return std::nullopt;
}

std::string_view to_string(Geometry geometry) noexcept {
  switch (geometry) {
    case Geometry::Line: return "line";
    case Geometry::Column: return "column";
    case Geometry::Wedge: return "wedge";
    case Geometry::Circle: return "circle";
  }
  return "line";
}

std::optional<Geometry> geometry_from_string(std::string_view text) noexcept {
  for (auto g : {Geometry::Line, Geometry::Column, Geometry::Wedge, Geometry::Circle}) {
    if (to_string(g) == text) return g;
  }
  return std::nullopt;
}

Vec3 rotate_z(const Vec3& v, double angle) noexcept {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {v.x * c - v.y * s, v.x * s + v.y * c, v.z};
}

double normalize_yaw(double yaw) {
  if (!std::isfinite(yaw)) {
    throw InvalidArgument("yaw must be finite");
  }
  if (yaw > -kPi && yaw <= kPi) return yaw;
  // remainder() lands in [-pi, pi]; the lower boundary folds onto +pi.
  double r = std::remainder(yaw, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

bool Pose::valid() const noexcept {
  return position.finite() && std::isfinite(yaw) && yaw > -kPi && yaw <= kPi;
}

bool FormationSpec::valid() const noexcept {
  return std::isfinite(spacing_m) && spacing_m > 0.0 && std::isfinite(altitude_offset_m);
}

const MemberView* SwarmSnapshot::find(UavId id) const noexcept {
  auto it = std::find_if(members.begin(), members.end(), [&](const MemberView& m) { return m.id == id; });
  return it == members.end() ? nullptr : &*it;
}

std::optional<std::string> SwarmSnapshot::validate() const {
  std::set<UavId> ids;
  std::set<std::uint32_t> slots;
  std::optional<UavId> role_leader;
  for (const auto& m : members) {
    if (!m.id.valid()) return "member with id 0";
    if (!ids.insert(m.id).second) return "duplicate member id " + std::to_string(m.id.value());
    switch (m.role.kind) {
      case RoleKind::Leader:
        if (role_leader) return "more than one leader";
        role_leader = m.id;
        break;
      case RoleKind::Follower:
        if (m.role.slot == 0) return "follower slot 0 for uav " + std::to_string(m.id.value());
        if (!slots.insert(m.role.slot).second) return "duplicate follower slot " + std::to_string(m.role.slot);
        break;
      case RoleKind::Unassigned: break;
    }
  }
  if (role_leader != leader) return "leader field disagrees with member roles";
  if (formation && !formation->valid()) return "invalid formation spec";
  return std::nullopt;
}

}  // namespace swarmlink
