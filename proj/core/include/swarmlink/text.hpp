#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarmlink/errors.hpp"
#include "swarmlink/messages.hpp"
#include "swarmlink/model.hpp"
#include "swarmlink/payload.hpp"
#include "swarmlink/vehicle.hpp"

// Canonical text form of the domain types: JSON with lower_snake_case field
// names, vectors as [x, y, z] and enums as lower_snake_case strings. Used for
// message payloads, trace records and the ground-station API.

namespace swarmlink {

using Json = nlohmann::ordered_json;

void to_json(Json& j, const UavId& id);
void from_json(const Json& j, UavId& id);

void to_json(Json& j, const Vec3& v);
void from_json(const Json& j, Vec3& v);

void to_json(Json& j, const Pose& p);
void from_json(const Json& j, Pose& p);

void to_json(Json& j, UavClass c);
void from_json(const Json& j, UavClass& c);

void to_json(Json& j, MissionState s);
void from_json(const Json& j, MissionState& s);

void to_json(Json& j, MissionEvent e);
void from_json(const Json& j, MissionEvent& e);

void to_json(Json& j, Geometry g);
void from_json(const Json& j, Geometry& g);

void to_json(Json& j, const SwarmRole& r);
void from_json(const Json& j, SwarmRole& r);

/// Field shape only; semantic validity (spacing > 0) is FormationSpec::valid().
void to_json(Json& j, const FormationSpec& f);
void from_json(const Json& j, FormationSpec& f);

void to_json(Json& j, const MemberView& m);
void from_json(const Json& j, MemberView& m);

void to_json(Json& j, const SwarmSnapshot& s);
void from_json(const Json& j, SwarmSnapshot& s);

void to_json(Json& j, const Setpoint& s);
void from_json(const Json& j, Setpoint& s);

void to_json(Json& j, const VehicleState& s);
void from_json(const Json& j, VehicleState& s);

void to_json(Json& j, const Heartbeat& h);
void from_json(const Json& j, Heartbeat& h);

void to_json(Json& j, const Telemetry& t);
void from_json(const Json& j, Telemetry& t);

void to_json(Json& j, UavAction a);
void from_json(const Json& j, UavAction& a);

void to_json(Json& j, const UavCommand& c);
void from_json(const Json& j, UavCommand& c);

void to_json(Json& j, const GimbalCommand& c);
void from_json(const Json& j, GimbalCommand& c);

void to_json(Json& j, const CommandOutcome& o);
void from_json(const Json& j, CommandOutcome& o);

void to_json(Json& j, const OperatorCommand& c);
void from_json(const Json& j, OperatorCommand& c);

}  // namespace swarmlink

// OperatorCommand is a std::variant, so argument-dependent lookup cannot find
// the swarmlink overloads above.
template <>
struct nlohmann::adl_serializer<swarmlink::OperatorCommand> {
  template <typename J>
  static void to_json(J& j, const swarmlink::OperatorCommand& c) {
    swarmlink::to_json(j, c);
  }
  template <typename J>
  static void from_json(const J& j, swarmlink::OperatorCommand& c) {
    swarmlink::from_json(j, c);
  }
};

namespace swarmlink {

void to_json(Json& j, const GcsCommand& c);
void from_json(const Json& j, GcsCommand& c);

void to_json(Json& j, const GimbalState& g);
void from_json(const Json& j, GimbalState& g);

void to_json(Json& j, const FrameMeta& f);
void from_json(const Json& j, FrameMeta& f);

void to_json(Json& j, const Detection& d);
void from_json(const Json& j, Detection& d);

/// Parses JSON text. Throws InvalidArgument on syntax errors.
Json parse_json(std::string_view text);

/// Converts `j` to T. Throws InvalidArgument on missing fields, wrong types
/// or out-of-range values.
template <typename T>
T from_text_json(const Json& j) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(e.what());
  }
}

template <typename T>
T parse_as(std::string_view text) {
  return from_text_json<T>(parse_json(text));
}

template <typename T>
std::string to_text(const T& value) {
  return Json(value).dump();
}

/// Middleware payload encoding: the compact text form as bytes.
template <typename T>
std::vector<std::uint8_t> encode_payload(const T& value) {
  const std::string text = to_text(value);
  return {text.begin(), text.end()};
}

template <typename T>
T decode_payload(const std::vector<std::uint8_t>& bytes) {
  return parse_as<T>(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace swarmlink
