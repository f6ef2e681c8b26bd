#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "swarmlink/middleware/bus.hpp"
#include "swarmlink/middleware/sim_network.hpp"
#include "swarmlink/node.hpp"
#include "swarmlink/trace.hpp"

namespace swarmlink {

namespace fault {
struct KillUav {
  NodeId node = 0;
};
struct SilenceHeartbeats {
  UavId id;
};
struct PartitionLink {
  NodeId a = 0;
  NodeId b = 0;
};
struct RestoreLink {
  NodeId a = 0;
  NodeId b = 0;
};
}  // namespace fault

using Fault = std::variant<fault::KillUav, fault::SilenceHeartbeats, fault::PartitionLink, fault::RestoreLink>;

std::string_view fault_name(const Fault& f) noexcept;
Json fault_fields(const Fault& f);

struct ScenarioEvent {
  std::uint64_t t_us = 0;
  std::variant<OperatorCommand, Fault> action;
  std::size_t line = 0;  // 1-based line in the scenario file
};

/// Where swarm/state originates at start-up. With Onboard the ground station
/// hosts no coordinator and the lowest-id UAV takes over once the silence
/// threshold passes. Onboard takeover is armed in both modes.
enum class CoordinatorMode { Gcs, Onboard };

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::uint32_t dt_ms = 100;
  double duration_s = 0.0;
  mw::NetworkModel network;
  MembershipConfig membership;
  CoordinatorMode coordinator = CoordinatorMode::Gcs;
  std::vector<UavSpec> uavs;
  std::vector<ScenarioEvent> events;

  std::uint64_t dt_us() const noexcept { return std::uint64_t{dt_ms} * 1000; }
  std::uint64_t duration_us() const noexcept;
  /// Replaces both the sim and the network seed.
  void override_seed(std::uint64_t seed) noexcept;
};

/// Parses YAML scenario text. Throws ConfigError carrying the 1-based line of
/// the offending key.
ScenarioConfig parse_scenario(const std::string& text, const std::string& name = "scenario");
/// Reads and parses a scenario file. The ConfigError message is prefixed
/// with "<path>:<line>: ".
ScenarioConfig load_scenario(const std::string& path);

struct UavSummary {
  UavId id;
  bool alive = true;
  MissionState mission_state = MissionState::Init;
  Pose pose;
  std::uint64_t command_rejections = 0;
  std::uint64_t fsm_rejections = 0;
  bool coordinating = false;
};

struct RunSummary {
  std::uint64_t end_us = 0;
  std::optional<SwarmSnapshot> final_snapshot;
  std::vector<UavSummary> uavs;
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_dropped = 0;
  std::uint64_t trace_records = 0;
};

Json to_json_value(const RunSummary& summary);

/// Deterministic discrete-time run of a scenario over SimNetwork. Each tick:
/// due events, network step, bus polls, node ingest, coordinators, then UAV
/// automation, telemetry, heartbeats, payload and vehicle integration.
class Simulation {
 public:
  /// `trace_out` may be null (records are counted but not written).
  Simulation(ScenarioConfig config, std::ostream* trace_out);
  ~Simulation();

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Runs one tick at now(), then advances the clock by dt.
  void step();
  bool finished() const noexcept { return now_us_ > config_.duration_us(); }
  RunSummary run();
  RunSummary summary() const;

  std::uint64_t now_us() const noexcept { return now_us_; }
  const ScenarioConfig& config() const noexcept { return config_; }
  TraceWriter& trace() noexcept { return trace_; }

  /// The ground station, or null once killed.
  GcsNode* gcs() noexcept { return gcs_alive_ ? gcs_.get() : nullptr; }
  /// The ground-station node object, dead or alive.
  GcsNode& gcs_node() noexcept { return *gcs_; }
  const UavNode* uav(UavId id) const;
  bool alive(NodeId node) const;

  /// Operator command at the current time through the ground station (503
  /// "ground station down" once it has been killed).
  CommandResponse submit(const OperatorCommand& command);

 private:
  struct UavSlot {
    std::unique_ptr<mw::Bus> bus;
    std::unique_ptr<UavNode> node;
    bool alive = true;
  };

  void apply(const ScenarioEvent& event);
  void apply_fault(const Fault& f);
  std::vector<TruthTarget> truth() const;

  ScenarioConfig config_;
  TraceWriter trace_;
  mw::SimNetwork net_;
  std::uint64_t now_us_ = 0;
  std::size_t next_event_ = 0;

  std::unique_ptr<mw::Bus> gcs_bus_;
  std::unique_ptr<GcsNode> gcs_;
  bool gcs_alive_ = true;
  std::map<UavId, UavSlot> uavs_;
};

NodeOptions node_options(const ScenarioConfig& config);

}  // namespace swarmlink
