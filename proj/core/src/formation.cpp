#include "swarmlink/formation.hpp"

#include <algorithm>
#include <cmath>

#include "swarmlink/errors.hpp"

namespace swarmlink {

std::vector<BodyOffset> compute_formation_offsets(const FormationSpec& spec, std::size_t n_followers) {
  if (!spec.valid()) throw InvalidArgument("invalid formation spec");
  const double d = spec.spacing_m;
  const double z = spec.altitude_offset_m;
  std::vector<BodyOffset> offsets;
  offsets.reserve(n_followers);
  for (std::size_t i = 1; i <= n_followers; ++i) {
    const double rank = static_cast<double>((i + 1) / 2);
    const double side = (i % 2 == 1) ? -1.0 : 1.0;
    switch (spec.geometry) {
      case Geometry::Line:
        offsets.push_back({{0.0, side * rank * d, z}});
        break;
      case Geometry::Column:
        offsets.push_back({{-static_cast<double>(i) * d, 0.0, z}});
        break;
      case Geometry::Wedge:
        offsets.push_back({{-rank * d, side * rank * d, z}});
        break;
      case Geometry::Circle: {
        const double angle = 2.0 * kPi * static_cast<double>(i - 1) / static_cast<double>(n_followers);
        offsets.push_back({{d * std::cos(angle), d * std::sin(angle), z}});
        break;
      }
    }
  }
  return offsets;
}

Setpoint follower_setpoint(const Pose& leader, const BodyOffset& offset) {
  return {leader.position + rotate_z(offset.value, leader.yaw), leader.yaw};
}

std::map<UavId, std::uint32_t> assign_slots(std::span<const UavId> member_ids, UavId leader) {
  if (std::find(member_ids.begin(), member_ids.end(), leader) == member_ids.end()) {
    throw InvalidArgument("leader " + std::to_string(leader.value()) + " is not a member");
  }
  std::vector<UavId> followers;
  for (UavId id : member_ids) {
    if (id != leader) followers.push_back(id);
  }
  std::sort(followers.begin(), followers.end());
  followers.erase(std::unique(followers.begin(), followers.end()), followers.end());
  std::map<UavId, std::uint32_t> slots;
  std::uint32_t next = 1;
  for (UavId id : followers) slots.emplace(id, next++);
  return slots;
}

}  // namespace swarmlink
