#include "swarmlink/middleware/sim_network.hpp"

#include <cmath>

#include "swarmlink/errors.hpp"
#include "swarmlink/middleware/wire.hpp"

namespace swarmlink::mw {

namespace {

std::pair<NodeId, NodeId> link_key(NodeId a, NodeId b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

FrameHeader peek_header(const std::vector<std::uint8_t>& bytes) {
  FrameHeader h;
  try {
    auto e = decode_frame(bytes);
    h.topic = e.topic;
    h.publisher = e.publisher;
    h.seq = e.seq;
    h.ack = e.ack;
    h.reliable = e.qos.is_reliable();
  } catch (const DecodeError&) {
  }
  return h;
}

}  // namespace

void NetworkModel::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(latency_mean_ms)) throw InvalidArgument("latency_mean_ms must be finite and >= 0");
  if (!finite_nonneg(latency_jitter_ms)) throw InvalidArgument("latency_jitter_ms must be finite and >= 0");
  if (!std::isfinite(drop_probability) || drop_probability < 0.0 || drop_probability >= 1.0) {
    throw InvalidArgument("drop_probability must be in [0, 1)");
  }
}

LinkDraw draw_link(SimRng& rng, const NetworkModel& model) {
  const double u_drop = rng.uniform01();
  const double u_jitter = rng.uniform01();
  LinkDraw d;
  d.dropped = u_drop < model.drop_probability;
  const double delay_ms = model.latency_mean_ms + (2.0 * u_jitter - 1.0) * model.latency_jitter_ms;
  d.delay_us = delay_ms <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(delay_ms * 1000.0));
  return d;
}

const char* to_string(DropReason reason) noexcept {
  switch (reason) {
    case DropReason::random: return "random";
    case DropReason::partition: return "partition";
    case DropReason::detached: return "detached";
  }
  return "random";
}

// --- SimEndpoint ---------------------------------------------------------

void SimEndpoint::send(NodeId to, std::vector<std::uint8_t> frame, std::uint64_t now_us) {
  if (!alive_) return;
  net_->send(id_, to, std::move(frame), now_us);
}

std::vector<InboundFrame> SimEndpoint::receive() {
  std::vector<InboundFrame> out;
  out.swap(inbox_);
  return out;
}

std::vector<NodeId> SimEndpoint::destinations(const TopicName& topic) const {
  return net_->readers(topic, id_, false);
}

std::vector<NodeId> SimEndpoint::reliable_readers(const TopicName& topic) const {
  return net_->readers(topic, id_, true);
}

void SimEndpoint::announce(const TopicName& topic, QosProfile qos) {
  if (!alive_) return;
  auto& entry = net_->directory_[topic][id_];
  entry = entry || qos.is_reliable();
}

// --- SimNetwork ----------------------------------------------------------

SimNetwork::SimNetwork(NetworkModel model) : model_(model), rng_(model.seed) { model_.validate(); }

SimEndpoint& SimNetwork::attach(NodeId id) {
  if (endpoints_.contains(id)) throw InvalidArgument("node " + std::to_string(id) + " already attached");
  auto [it, _] = endpoints_.emplace(id, std::make_unique<SimEndpoint>(*this, id));
  return *it->second;
}

void SimNetwork::detach(NodeId id) {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end()) return;
  it->second->alive_ = false;
  it->second->inbox_.clear();
  for (auto& [topic, nodes] : directory_) nodes.erase(id);
}

bool SimNetwork::attached(NodeId id) const {
  auto it = endpoints_.find(id);
  return it != endpoints_.end() && it->second->alive_;
}

void SimNetwork::partition(NodeId a, NodeId b) { partitions_.insert(link_key(a, b)); }

void SimNetwork::restore(NodeId a, NodeId b) { partitions_.erase(link_key(a, b)); }

bool SimNetwork::partitioned(NodeId a, NodeId b) const { return partitions_.contains(link_key(a, b)); }

std::vector<NodeId> SimNetwork::readers(const TopicName& topic, NodeId exclude, bool reliable_only) const {
  std::vector<NodeId> out;
  auto it = directory_.find(topic);
  if (it == directory_.end()) return out;
  for (const auto& [node, reliable] : it->second) {
    if (node == exclude) continue;
    if (reliable_only && !reliable) continue;
    out.push_back(node);
  }
  return out;
}

void SimNetwork::record_drop(NodeId from, NodeId to, std::uint64_t sent_us, DropReason reason,
                             const std::vector<std::uint8_t>& bytes) {
  ++dropped_;
  drops_.push_back({from, to, sent_us, reason, peek_header(bytes)});
}

void SimNetwork::send(NodeId from, NodeId to, std::vector<std::uint8_t> frame, std::uint64_t now_us) {
  ++sent_;
  // The draw happens for every frame, lost or not, so the generator's
  // consumption depends only on the send sequence.
  const LinkDraw draw = draw_link(rng_, model_);
  if (!attached(to)) {
    record_drop(from, to, now_us, DropReason::detached, frame);
    return;
  }
  if (partitioned(from, to)) {
    record_drop(from, to, now_us, DropReason::partition, frame);
    return;
  }
  if (draw.dropped) {
    record_drop(from, to, now_us, DropReason::random, frame);
    return;
  }
  queue_.push({now_us + draw.delay_us, order_++, from, to, now_us, std::move(frame)});
}

std::vector<NetDelivery> SimNetwork::step(std::uint64_t now_us) {
  if (now_us < last_step_us_) {
    throw InvalidArgument("step_network time regression: " + std::to_string(now_us) + " < " +
                          std::to_string(last_step_us_));
  }
  last_step_us_ = now_us;
  std::vector<NetDelivery> delivered;
  while (!queue_.empty() && queue_.top().arrival_us <= now_us) {
    InFlight f = queue_.top();
    queue_.pop();
    auto it = endpoints_.find(f.to);
    if (it == endpoints_.end() || !it->second->alive_) {
      record_drop(f.from, f.to, f.sent_us, DropReason::detached, f.bytes);
      continue;
    }
    if (partitioned(f.from, f.to)) {
      record_drop(f.from, f.to, f.sent_us, DropReason::partition, f.bytes);
      continue;
    }
    NetDelivery d{f.from, f.to, f.sent_us, f.arrival_us, {}};
    try {
      d.envelope = decode_frame(f.bytes);
    } catch (const DecodeError&) {
    }
    it->second->inbox_.push_back({f.from, std::move(f.bytes), f.arrival_us});
    delivered.push_back(std::move(d));
  }
  return delivered;
}

std::vector<NetDrop> SimNetwork::take_drops() {
  std::vector<NetDrop> out;
  out.swap(drops_);
  return out;
}

}  // namespace swarmlink::mw
