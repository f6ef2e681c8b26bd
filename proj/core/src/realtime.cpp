#include "swarmlink/realtime.hpp"

#include <chrono>

#include "swarmlink/errors.hpp"

namespace swarmlink {

RealSwarm::RealSwarm(ScenarioConfig config, std::ostream* trace_out, std::string host)
    : config_(std::move(config)), trace_(trace_out), start_(std::chrono::steady_clock::now()) {
  const auto options = node_options(config_);
  const auto clock = [this] { return now_us(); };

  auto make = [&](NodeId id) -> Node& {
    auto node = std::make_unique<Node>();
    node->id = id;
    node->transport = std::make_unique<mw::UdpTransport>(id, mw::UdpEndpoint{host, 0}, std::map<NodeId, mw::UdpEndpoint>{});
    node->bus = std::make_unique<mw::Bus>(*node->transport);
    trace_bus(*node->bus, trace_, clock);
    nodes_.push_back(std::move(node));
    return *nodes_.back();
  };

  trace_.record(0, "membership",
                Json{{"event", "config"},
                     {"scenario", config_.name},
                     {"mode", "real"},
                     {"dt_ms", config_.dt_ms},
                     {"heartbeat_period_ms", config_.membership.heartbeat_period_ms},
                     {"stale_after_missed", config_.membership.stale_after_missed},
                     {"leader_policy", to_string(config_.membership.leader_policy)},
                     {"coordinator", config_.coordinator == CoordinatorMode::Gcs ? "gcs" : "onboard"}});

  Node& gcs = make(kGroundStationNode);
  gcs.gcs = std::make_unique<GcsNode>(*gcs.bus, options, config_.coordinator == CoordinatorMode::Gcs, &trace_);
  gcs_ = &gcs;
  for (const auto& spec : config_.uavs) {
    Node& n = make(spec.id.node());
    n.uav = std::make_unique<UavNode>(spec, *n.bus, options, &trace_);
    n.uav->set_truth_source([this] { return truth(); });
    poses_[spec.id] = Pose{spec.start_position, spec.start_yaw};
  }
  // Full mesh; each set_peer announces the local subscriptions to the new peer.
  for (auto& a : nodes_) {
    for (auto& b : nodes_) {
      if (a != b) a->transport->set_peer(b->id, mw::UdpEndpoint{host, b->transport->bound_port()});
    }
  }
}

RealSwarm::~RealSwarm() { stop(); }

std::uint64_t RealSwarm::now_us() const {
  const auto d = std::chrono::steady_clock::now() - start_;
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(d).count());
}

void RealSwarm::start() {
  if (running_.exchange(true)) return;
  start_ = std::chrono::steady_clock::now();
  for (auto& n : nodes_) {
    Node* node = n.get();
    node->thread = std::thread([this, node] { loop(*node); });
  }
}

void RealSwarm::stop() {
  if (!running_.exchange(false)) return;
  for (auto& n : nodes_) {
    if (n->thread.joinable()) n->thread.join();
  }
  trace_.flush();
}

void RealSwarm::post(Node& node, std::function<void()> action) {
  std::lock_guard lock(node.queue_mu);
  node.queue.push_back(std::move(action));
}

RealSwarm::Node* RealSwarm::find(NodeId id) {
  for (auto& n : nodes_) {
    if (n->id == id) return n.get();
  }
  return nullptr;
}

std::vector<TruthTarget> RealSwarm::truth() const {
  std::lock_guard lock(poses_mu_);
  std::vector<TruthTarget> out;
  for (const auto& [id, pose] : poses_) out.push_back({id, pose});
  return out;
}

void RealSwarm::loop(Node& node) {
  const auto dt = std::chrono::milliseconds(config_.dt_ms);
  const double dt_s = static_cast<double>(config_.dt_ms) / 1000.0;
  auto next = start_;
  while (running_ && node.alive) {
    std::vector<std::function<void()>> actions;
    {
      std::lock_guard lock(node.queue_mu);
      actions.swap(node.queue);
    }
    for (auto& a : actions) a();
    if (!node.alive) break;

    const auto now = now_us();
    try {
      node.bus->poll(now);
      if (node.gcs) {
        node.gcs->ingest(now);
        node.gcs->coordinate(now);
      } else {
        node.uav->ingest(now);
        node.uav->coordinate(now);
        node.uav->advance(now, dt_s);
        std::lock_guard lock(poses_mu_);
        poses_[node.uav->id()] = node.uav->vehicle().state().pose;
      }
    } catch (const InvariantViolation& e) {
      trace_.record(now, "audit", Json{{"event", "invariant_violation"}, {"node", node.id}, {"error", e.what()}});
      node.alive = false;
      break;
    }
    next += dt;
    std::this_thread::sleep_until(next);
  }
}

CommandResponse RealSwarm::submit(const OperatorCommand& command) {
  if (!gcs_->alive) return CommandResponse{false, 0, "ground station down", 503};
  return gcs_->gcs->submit(command, now_us());
}

void RealSwarm::apply(const ScenarioEvent& event) {
  const auto now = now_us();
  if (const auto* cmd = std::get_if<OperatorCommand>(&event.action)) {
    if (gcs_->alive) {
      gcs_->gcs->submit(*cmd, now);
    } else {
      trace_.record(now, "audit",
                    Json{{"source", "operator"},
                         {"action", action_name(*cmd)},
                         {"accepted", false},
                         {"reason", "ground station down"}});
    }
    return;
  }
  const auto& f = std::get<Fault>(event.action);
  Json fields{{"event", "fault"}, {"fault", fault_name(f)}};
  fields.update(fault_fields(f));
  trace_.record(now, "network", fields);
  std::visit(
      [this](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, fault::KillUav>) {
          Node* n = find(x.node);
          if (!n) return;
          n->alive = false;
          for (auto& other : nodes_) {
            n->transport->block(other->id);
            other->transport->block(n->id);
          }
        } else if constexpr (std::is_same_v<T, fault::SilenceHeartbeats>) {
          if (Node* n = find(x.id.node())) {
            UavNode* uav = n->uav.get();
            post(*n, [uav] { uav->silence_heartbeats(true); });
          }
        } else {
          Node* a = find(x.a);
          Node* b = find(x.b);
          if (!a || !b) return;
          if constexpr (std::is_same_v<T, fault::PartitionLink>) {
            a->transport->block(b->id);
            b->transport->block(a->id);
          } else {
            a->transport->unblock(b->id);
            b->transport->unblock(a->id);
          }
        }
      },
      f);
}

RunSummary RealSwarm::run() {
  start();
  for (const auto& ev : config_.events) {
    std::this_thread::sleep_until(start_ + std::chrono::microseconds(ev.t_us));
    apply(ev);
  }
  std::this_thread::sleep_until(start_ + std::chrono::microseconds(config_.duration_us()));
  stop();
  return summary();
}

RunSummary RealSwarm::summary() const {
  RunSummary s;
  s.end_us = now_us();
  if (gcs_->alive) s.final_snapshot = gcs_->gcs->station().latest_snapshot();
  for (const auto& n : nodes_) {
    if (!n->uav) continue;
    const auto& u = *n->uav;
    s.uavs.push_back(UavSummary{u.id(), n->alive, u.mission_state(), u.vehicle().state().pose, u.command_rejections(),
                                u.fsm_rejections(), u.coordinating()});
  }
  s.trace_records = trace_.records();
  return s;
}

}  // namespace swarmlink
