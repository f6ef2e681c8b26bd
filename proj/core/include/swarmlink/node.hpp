#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "swarmlink/coordinator.hpp"
#include "swarmlink/groundstation.hpp"
#include "swarmlink/middleware/bus.hpp"
#include "swarmlink/mission_fsm.hpp"
#include "swarmlink/payload.hpp"
#include "swarmlink/trace.hpp"
#include "swarmlink/vehicle.hpp"

namespace swarmlink {

struct NodeOptions {
  CoordinatorConfig coordinator;
  std::uint64_t telemetry_period_us = 100'000;
  /// LinkLost fires after this long without swarm/state in a supervised state.
  std::uint64_t link_loss_after_us = 5'000'000;
  /// RTL and Failsafe land once this close (horizontally) to the launch point.
  double rtl_land_radius_m = 1.0;
  /// Whether a UAV may take over coordination when swarm/state goes silent.
  bool onboard_takeover = true;

  const MembershipConfig& membership() const noexcept { return coordinator.membership; }
};

/// Runs a Coordinator on some node: turns its outputs into bus traffic and
/// trace records.
class CoordinatorHost {
 public:
  CoordinatorHost(mw::Bus& bus, CoordinatorConfig config, TraceWriter* trace);

  Coordinator& coordinator() noexcept { return coordinator_; }
  const Coordinator& coordinator() const noexcept { return coordinator_; }

  void on_heartbeat(const mw::Envelope& envelope, std::uint64_t now_us);
  /// Applies the operator command; publishes its fan-out only when `active`.
  void on_operator(const mw::Envelope& envelope, std::uint64_t now_us, bool active);
  /// Runs the coordinator at its cadence and publishes the results.
  void run(std::uint64_t now_us);

 private:
  void send_command(const OutgoingCommand& out, std::uint64_t now_us);
  void send_gimbal(const OutgoingGimbal& out, std::uint64_t now_us);
  void publish_tick(const TickOutput& out, std::uint64_t now_us);
  mw::Publisher& publisher(const mw::TopicName& topic, mw::QosProfile qos);
  void trace(std::uint64_t t_us, std::string_view kind, const Json& fields);

  mw::Bus* bus_;
  Coordinator coordinator_;
  TraceWriter* trace_;
  std::map<mw::TopicName, mw::Publisher> publishers_;
};

struct UavSpec {
  UavId id;
  UavClass uav_class = UavClass::Generic;
  Vec3 start_position;
  double start_yaw = 0.0;
  VehicleParams params;
};

using TruthSource = std::function<std::vector<TruthTarget>()>;

/// One UAV: vehicle, mission FSM, payload, and a standby coordinator that
/// becomes active when the swarm loses its coordinator.
/// Per tick the owner calls ingest -> coordinate -> advance.
class UavNode {
 public:
  UavNode(UavSpec spec, mw::Bus& bus, NodeOptions options, TraceWriter* trace);

  UavNode(const UavNode&) = delete;
  UavNode& operator=(const UavNode&) = delete;

  void ingest(std::uint64_t now_us);
  void coordinate(std::uint64_t now_us);
  void advance(std::uint64_t now_us, double dt_s);

  /// Fault injection: stop publishing heartbeats, nothing else.
  void silence_heartbeats(bool silenced) noexcept { heartbeats_silenced_ = silenced; }
  bool heartbeats_silenced() const noexcept { return heartbeats_silenced_; }

  void set_truth_source(TruthSource source) { truth_ = std::move(source); }
  void set_detector(std::shared_ptr<const Detector> detector) { detector_ = std::move(detector); }

  UavId id() const noexcept { return spec_.id; }
  const UavSpec& spec() const noexcept { return spec_; }
  const Vehicle& vehicle() const noexcept { return vehicle_; }
  MissionState mission_state() const noexcept { return fsm_.state(); }
  bool coordinating() const noexcept { return coordinating_; }
  const Coordinator& coordinator() const noexcept { return host_.coordinator(); }
  const GimbalState& gimbal() const noexcept { return gimbal_; }
  std::uint64_t command_rejections() const noexcept { return command_rejections_; }
  std::uint64_t fsm_rejections() const noexcept { return fsm_rejections_; }

 private:
  CommandOutcome execute(const UavCommand& command, std::uint64_t now_us);
  bool fire(MissionEvent event, std::uint64_t now_us, const char* cause);
  void hold_position();
  void return_to_launch();
  void supervise(std::uint64_t now_us);
  void on_swarm_state(const mw::Envelope& envelope, std::uint64_t now_us);
  void on_gimbal(const mw::Envelope& envelope, std::uint64_t now_us);
  void report(const CommandOutcome& outcome, std::uint64_t now_us);
  void publish_telemetry(std::uint64_t now_us);
  void publish_heartbeat(std::uint64_t now_us);
  void run_payload(std::uint64_t now_us);
  void trace(std::uint64_t t_us, std::string_view kind, const Json& fields);

  UavSpec spec_;
  mw::Bus* bus_;
  NodeOptions options_;
  TraceWriter* trace_;
  Vehicle vehicle_;
  MissionFsm fsm_;
  CoordinatorHost host_;
  bool coordinating_ = false;

  mw::SubscriptionHandle cmd_sub_;
  mw::SubscriptionHandle gimbal_sub_;
  mw::SubscriptionHandle state_sub_;
  mw::SubscriptionHandle heartbeat_sub_;
  mw::SubscriptionHandle operator_sub_;
  mw::Publisher heartbeat_pub_;
  mw::Publisher telemetry_pub_;
  mw::Publisher result_pub_;
  mw::Publisher frames_pub_;
  mw::Publisher detections_pub_;

  std::optional<std::uint64_t> last_state_rx_us_;
  std::uint64_t next_telemetry_us_ = 0;
  std::uint64_t next_heartbeat_us_ = 0;
  std::uint64_t heartbeat_seq_ = 0;
  bool heartbeats_silenced_ = false;

  std::optional<CameraStream> camera_;
  GimbalState gimbal_;
  TruthSource truth_;
  std::shared_ptr<const Detector> detector_;

  std::uint64_t command_rejections_ = 0;
  std::uint64_t fsm_rejections_ = 0;
};

/// The ground-station node (id 0): hosts the GroundStation service and, in
/// the default deployment, the coordinator.
class GcsNode {
 public:
  GcsNode(mw::Bus& bus, NodeOptions options, bool host_coordinator, TraceWriter* trace);

  GcsNode(const GcsNode&) = delete;
  GcsNode& operator=(const GcsNode&) = delete;

  void ingest(std::uint64_t now_us);
  void coordinate(std::uint64_t now_us);

  CommandResponse submit(const OperatorCommand& command, std::uint64_t now_us) {
    return station_.handle_command(command, now_us);
  }

  GroundStation& station() noexcept { return station_; }
  const GroundStation& station() const noexcept { return station_; }
  SnapshotFeed& feed() noexcept { return feed_; }
  bool hosts_coordinator() const noexcept { return host_ != nullptr; }
  const Coordinator* coordinator() const noexcept { return host_ ? &host_->coordinator() : nullptr; }

 private:
  void trace(std::uint64_t t_us, std::string_view kind, const Json& fields);

  mw::Bus* bus_;
  TraceWriter* trace_;
  mw::Publisher gcs_pub_;
  GroundStation station_;
  SnapshotFeed feed_;
  std::unique_ptr<CoordinatorHost> host_;
  mw::SubscriptionHandle state_sub_;
  mw::SubscriptionHandle result_sub_;
  mw::SubscriptionHandle heartbeat_sub_;
  mw::SubscriptionHandle operator_sub_;
};

}  // namespace swarmlink
