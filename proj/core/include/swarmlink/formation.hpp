#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "swarmlink/model.hpp"
#include "swarmlink/vehicle.hpp"

namespace swarmlink {

/// Offset in the leader's body frame: x forward, y right, z down.
struct BodyOffset {
  Vec3 value;

  friend bool operator==(const BodyOffset&, const BodyOffset&) = default;
};

/// Slot offsets for `n_followers`, index = slot - 1. Odd slots go left,
/// even slots right, so the shape grows symmetrically as members join.
/// Circle treats spacing_m as the radius.
std::vector<BodyOffset> compute_formation_offsets(const FormationSpec& spec, std::size_t n_followers);

/// Target for a follower: leader position plus the offset rotated by the
/// leader's yaw; the follower keeps the leader's heading.
Setpoint follower_setpoint(const Pose& leader, const BodyOffset& offset);

/// Non-leader ids in ascending order get slots 1..n. Throws InvalidArgument
/// if `leader` is not among `member_ids`.
std::map<UavId, std::uint32_t> assign_slots(std::span<const UavId> member_ids, UavId leader);

}  // namespace swarmlink
